#include <doctest.h>

#include <cmath>

#include "expect.hpp"
#include "oracles.hpp"
#include "parksense/config.hpp"
#include "parksense/error.hpp"
#include "parksense/geometry.hpp"
#include "parksense/model.hpp"
#include "parksense/space_map.hpp"

using namespace parksense;

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {20, 20, 30, 30}) == 0.0);
  // inter 50, union 150
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0).epsilon(1e-15));
  CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);  // edge contact has no area
}

TEST_CASE("iou rejects degenerate boxes") {
  CHECK(kind_of([] { iou({0, 0, 0, 10}, {0, 0, 10, 10}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { iou({0, 0, 10, 10}, {5, 5, 5, 6}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { iou({0, 0, NAN, 10}, {0, 0, 10, 10}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { iou({0, 0, 10, 10}, {3, 3, 1, 8}); }) == ErrorKind::InvalidGeometry);
}

TEST_CASE("iou properties on random boxes") {
  oracle::Gen g(42);
  for (int k = 0; k < 5000; ++k) {
    const auto a = g.real_box(500, 200);
    const auto b = g.real_box(500, 200);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == 1.0);

    const double s = g.real(0.1, 20.0);
    const double dx = g.real(0.0, 300.0);
    const double dy = g.real(0.0, 300.0);
    auto xf = [&](BoundingBox r) { return BoundingBox{r.x1 * s + dx, r.y1 * s + dy, r.x2 * s + dx, r.y2 * s + dy}; };
    CHECK(iou(xf(a), xf(b)) == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("iou agrees with the pixel-count oracle") {
  oracle::Gen g(7);
  for (int k = 0; k < 1500; ++k) {
    auto a = g.pixel_box(1000, 300);
    auto b = g.coin(0.7) ? g.pixel_box(1000, 300) : a;
    if (g.coin(0.5)) {  // push b to overlap a
      const double w = b.width(), h = b.height();
      b.x1 = std::clamp(a.x1 + g.integer(-50, 50), 0.0, 1000.0 - w);
      b.y1 = std::clamp(a.y1 + g.integer(-50, 50), 0.0, 1000.0 - h);
      b.x2 = b.x1 + w;
      b.y2 = b.y1 + h;
    }
    CHECK(std::abs(iou(a, b) - oracle::raster_iou(a, b)) <= 2e-3);
  }
}

TEST_CASE("center containment uses closed edges") {
  const BoundingBox space{0, 0, 10, 10};
  CHECK(contains(space, box_from_center({5, 5}, 4, 4).center()));
  CHECK_FALSE(contains(space, box_from_center({50, 50}, 4, 4).center()));
  CHECK(contains(space, Point{10, 5}));
  CHECK(contains(space, Point{0, 0}));
  CHECK_FALSE(contains(space, Point{10.000001, 5}));

  oracle::Gen g(3);
  for (int k = 0; k < 2000; ++k) {
    const auto r = g.pixel_box(50, 20);
    const Point p{double(g.integer(-2, 52)), double(g.integer(-2, 52))};
    CHECK(contains(r, p) == oracle::point_in_rect(r, p));
  }
}

TEST_CASE("vehicle vocabulary") {
  for (const char* v : {"car", "van", "bus", "truck"}) CHECK(is_vehicle(v));
  for (const char* v : {"pedestrian", "Car", "blob", "", "cars", "bicycle"}) CHECK_FALSE(is_vehicle(v));
}

TEST_CASE("coverage, hull, dilate, clip and distance") {
  CHECK(coverage({0, 0, 10, 10}, {0, 0, 5, 10}) == 0.5);
  CHECK(coverage({0, 0, 10, 10}, {-5, -5, 20, 20}) == 1.0);
  CHECK(hull({0, 0, 1, 1}, {5, 6, 7, 8}) == BoundingBox{0, 0, 7, 8});
  CHECK(dilate({10, 10, 20, 20}, 2) == BoundingBox{8, 8, 22, 22});
  CHECK(clip({-5, -5, 5, 5}, 100, 100) == BoundingBox{0, 0, 5, 5});
  CHECK_FALSE(clip({-10, 0, -1, 5}, 100, 100).has_value());
  CHECK(rect_distance({0, 0, 10, 10}, {15, 0, 20, 10}) == 5.0);
  CHECK(rect_distance({0, 0, 10, 10}, {13, 14, 20, 20}) == 5.0);
  CHECK(rect_distance({0, 0, 10, 10}, {5, 5, 20, 20}) == 0.0);
  CHECK(BoundingBox{0, 0, 1, 1}.valid());
  CHECK_FALSE(BoundingBox{-1, 0, 1, 1}.valid());
  CHECK(BoundingBox{-1, 0, 1, 1}.has_area());
}

TEST_CASE("status and source names round-trip") {
  for (auto s : {SpaceStatus::Occupied, SpaceStatus::Vacant, SpaceStatus::Unknown}) CHECK(parse_status(to_string(s)) == s);
  for (auto s : {StatusSource::Ssd, StatusSource::Bg, StatusSource::FusedWarning, StatusSource::FusedOcclusion}) {
    CHECK(parse_source(to_string(s)) == s);
  }
  CHECK(is_final_source(StatusSource::FusedWarning));
  CHECK_FALSE(is_final_source(StatusSource::Bg));
  CHECK(kind_of([] { parse_status("full"); }) == ErrorKind::Parse);
}

TEST_CASE("config defaults, parsing and validation") {
  const PipelineConfig d;
  CHECK(d.th_max == 0.25);
  CHECK(d.th_min == 0.10);
  CHECK(d.iou_track == 0.60);
  CHECK(d.t_track_s == 8.0);
  CHECK(d.reid_window_s == 8.0);
  CHECK(d.r_warn == 0.8);
  CHECK(d.r_reactivate == 0.7);
  CHECK(d.occ_pct == 0.90);
  CHECK(d.fusion_step_s == 300.0);
  CHECK(d.snapshot_interval_s == 600.0);
  CHECK_NOTHROW(d.validate());

  const auto c = PipelineConfig::parse("# tuned\nth_max = 0.3\nreid_enabled=false\nmax_age_frames=7\nbg_noise_rate=0\n");
  CHECK(c.th_max == 0.3);
  CHECK_FALSE(c.reid_enabled);
  CHECK(c.max_age_frames == 7);
  CHECK(c.emulator.bg_noise_rate == 0.0);
  CHECK(PipelineConfig::parse(c.to_text()).to_text() == c.to_text());

  try {
    PipelineConfig::parse("th_max=0.3\nth_maxx=0.2\n", "cfg.txt");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(e.line() == 2u);
    CHECK(std::string(e.what()).find("cfg.txt:2") != std::string::npos);
  }
  CHECK(kind_of([] { PipelineConfig::parse("th_max=0.05\n"); }) == ErrorKind::Config);  // below th_min
  CHECK(kind_of([] { PipelineConfig::parse("occ_pct=1.5\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { PipelineConfig::parse("fusion_step_s=0\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { PipelineConfig::parse("th_min=abc\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { PipelineConfig::parse("min_hits=2.5\n"); }) == ErrorKind::Config);
}

TEST_CASE("space map parsing") {
  const auto map = SpaceMap::parse(
      "# demo\n"
      "S,1,n1,A,1,0,0,10,10,B\n"
      "S,1,n1,B,1,12,0,22,10,A;C\n"
      "S,1,n2,C,2,0,0,10,10,B\n");
  CHECK(map.spaces().size() == 3);
  CHECK(map.node_ids() == std::vector<std::string>{"n1", "n2"});
  const auto& n1 = map.layout("n1");
  CHECK(n1.size() == 2);
  CHECK(n1.are_neighbors(0, 1));
  CHECK(n1.neighbors[1].size() == 1);  // C lives on another node
  CHECK(n1.index_of("B") == 1u);
  CHECK(kind_of([&] { map.layout("n9"); }) == ErrorKind::Routing);
  CHECK(SpaceMap::parse(map.to_text()).to_text() == map.to_text());

  CHECK(kind_of([] { SpaceMap::parse("S,1,n1,A,1,0,0,10,10,\nS,1,n1,A,1,0,0,5,5,\n"); }) == ErrorKind::Map);
  CHECK(kind_of([] { SpaceMap::parse("S,1,n1,A,1,0,0,10,10,Z\n"); }) == ErrorKind::Map);
  CHECK(kind_of([] { SpaceMap::parse("S,1,n1,A,1,0,0,10,10,B\nS,1,n1,B,1,0,0,10,10,\n"); }) == ErrorKind::Map);
  CHECK(kind_of([] { SpaceMap::parse("S,1,n1,A,1,10,0,5,10,\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { SpaceMap::parse("S,2,n1,A,1,0,0,10,10,\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { SpaceMap::parse("S,1,n1,A,1,0,0,10\n"); }) == ErrorKind::Parse);
}

TEST_CASE("locate_space prefers the nearest center where rects overlap") {
  const auto map = SpaceMap::parse("S,1,n,low,1,0,40,100,100,high\nS,1,n,high,1,0,0,100,60,low\n");
  const auto& l = map.layout("n");
  CHECK(locate_space(l, {50, 30}) == l.index_of("high"));
  CHECK(locate_space(l, {50, 55}) == l.index_of("low"));
  CHECK(locate_space(l, {50, 50}) == l.index_of("high"));  // equidistant: smaller id
  CHECK_FALSE(locate_space(l, {50, 200}).has_value());
}

TEST_CASE("bundled space maps load") {
  const auto garage = SpaceMap::load(PARKSENSE_DATA_DIR "/spaces/garage.txt");
  CHECK(garage.layout("n6").size() == 10);
  CHECK(garage.layout("n3").size() == 6);
  const auto lot = SpaceMap::load(PARKSENSE_DATA_DIR "/spaces/lot16.txt");
  CHECK(lot.layout("lot16").size() == 16);
}
