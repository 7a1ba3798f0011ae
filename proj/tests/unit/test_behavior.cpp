#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "synthetic.hpp"
#include "vkg/behavior.hpp"
#include "vkg/encoder.hpp"

using namespace vkg;
using testing::make_record;

namespace {

const PortDirectory kAalborg{{Port{"Aalborg", 57.05, 9.93, 3000}}};

SegmentFeatures port_features(double start_sog, double end_sog, bool end_inside, bool start_inside) {
  SegmentFeatures f;
  f.mean_sog = (start_sog + end_sog) / 2;
  f.start_sog = start_sog;
  f.end_sog = end_sog;
  f.sog_std = 1.0;
  f.straightness = 0.9;
  f.start_port = PortProximity{"A", start_inside ? 500.0 : 9000.0, 3000};
  f.end_port = PortProximity{"A", end_inside ? 500.0 : 9000.0, 3000};
  return f;
}

}  // namespace

TEST_CASE("degenerate path has straightness 1") {
  const std::vector<AisRecord> recs = {make_record(1, 0, 57, 10, 0.0), make_record(1, 60, 57, 10, 0.0)};
  const auto f = extract_features(recs, PortDirectory{});
  CHECK(f.net_displacement_m == 0.0);
  CHECK(f.path_length_m == 0.0);
  CHECK(f.straightness == 1.0);
  CHECK(!f.start_port);
  CHECK(f.duration_s == 60.0);
}

TEST_CASE("straight constant course path") {
  const auto recs = testing::straight_track(1, 30, 60, 12, 45);
  const auto f = extract_features(recs, PortDirectory{});
  CHECK(f.straightness == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.total_course_change == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.mean_sog == doctest::Approx(12));
  CHECK(f.sog_std == doctest::Approx(0.0));
}

TEST_CASE("L-shaped path at the equator") {
  // Flat-earth oracle: 1000 m east, then 1000 m north.
  const double deg_per_m = 180.0 / (kPi * kEarthRadiusM);
  const std::vector<AisRecord> recs = {
      make_record(1, 0, 0, 0, 5.0, 90.0),
      make_record(1, 400, 0, 1000 * deg_per_m, 5.0, 0.0),
      make_record(1, 800, 1000 * deg_per_m, 1000 * deg_per_m, 5.0, 0.0),
  };
  const auto f = extract_features(recs, PortDirectory{});
  CHECK(f.path_length_m == doctest::Approx(2000).epsilon(1e-6));
  CHECK(std::abs(f.straightness - std::sqrt(2.0) / 2.0) < 1e-3);
  CHECK(f.total_course_change == doctest::Approx(90));
}

TEST_CASE("course changes use the shortest arc") {
  const std::vector<AisRecord> recs = {make_record(1, 0, 57, 10, 5.0, 359.0),
                                       make_record(1, 60, 57, 10.001, 5.0, 1.0),
                                       make_record(1, 120, 57, 10.002, std::nullopt, std::nullopt),
                                       make_record(1, 180, 57, 10.003, 5.0, 355.0)};
  const auto f = extract_features(recs, PortDirectory{});
  CHECK(f.total_course_change == doctest::Approx(8.0));
}

TEST_CASE("missing speeds are excluded from aggregates") {
  const std::vector<AisRecord> none = {make_record(1, 0, 57, 10), make_record(1, 60, 57, 10.01)};
  const auto f = extract_features(none, PortDirectory{});
  CHECK(!f.mean_sog);
  CHECK(!f.sog_std);
  const std::vector<AisRecord> some = {make_record(1, 0, 57, 10, 10.0), make_record(1, 60, 57, 10.01),
                                       make_record(1, 120, 57, 10.02, 4.0)};
  const auto g = extract_features(some, PortDirectory{});
  CHECK(g.mean_sog == doctest::Approx(7.0));
  CHECK(g.start_sog == 10.0);
  CHECK(g.end_sog == 4.0);
  CHECK(g.sog_std == doctest::Approx(3.0));
}

TEST_CASE("too short segments are rejected") {
  const std::vector<AisRecord> one = {make_record(1, 0, 57, 10)};
  CHECK_THROWS_AS(extract_features(one, PortDirectory{}), TooShort);
  CHECK_THROWS_AS(extract_features(std::span<const AisRecord>{}, PortDirectory{}), TooShort);
}

TEST_CASE("port distances use the nearest port") {
  const PortDirectory ports{{Port{"Far", 58, 10, 1000}, Port{"Near", 57.01, 10, 800}}};
  const std::vector<AisRecord> recs = {make_record(1, 0, 57, 10), make_record(1, 60, 57.005, 10)};
  const auto f = extract_features(recs, ports);
  REQUIRE(f.start_port);
  CHECK(f.start_port->port == "Near");
  CHECK(f.start_port->distance_m == doctest::Approx(haversine({57, 10}, {57.01, 10})));
  CHECK(!f.start_port->inside());
  CHECK(f.end_port->inside());
}

TEST_CASE("classification examples") {
  const RuleConfig rules;
  SegmentFeatures slow;
  slow.mean_sog = 0.1;
  CHECK(classify(slow, rules).name == patterns::kStationary);

  CHECK(classify(port_features(12, 3, true, false), rules).name == patterns::kPortEntry);
  CHECK(classify(port_features(3, 12, false, true), rules).name == patterns::kPortExit);
  // Entry outranks exit when both hold.
  CHECK(classify(port_features(12, 3, true, true), rules).name == patterns::kPortEntry);
  // Speed change outside any port is not a port pattern.
  CHECK(classify(port_features(12, 3, false, false), rules).name != patterns::kPortEntry);

  SegmentFeatures transit;
  transit.mean_sog = 14;
  transit.sog_std = 0.4;
  transit.straightness = 0.99;
  CHECK(classify(transit, rules).name == patterns::kTransit);

  SegmentFeatures turn = transit;
  turn.straightness = 0.6;
  turn.total_course_change = 120;
  CHECK(classify(turn, rules).name == patterns::kManeuver);
  turn.total_course_change = 10;
  CHECK(classify(turn, rules).name == patterns::kDrift);

  SegmentFeatures no_speed;
  no_speed.total_course_change = 50;
  CHECK(classify(no_speed, rules).name == patterns::kManeuver);
}

TEST_CASE("rule 1 dominates every other field") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1), big(0, 400);
  for (int i = 0; i < 1000; ++i) {
    SegmentFeatures f;
    f.mean_sog = u(rng) * 0.4999;
    f.start_sog = big(rng) / 10;
    f.end_sog = big(rng) / 10;
    f.sog_std = u(rng);
    f.straightness = u(rng);
    f.total_course_change = big(rng);
    f.end_port = PortProximity{"A", 10, 3000};
    f.start_port = PortProximity{"A", 10, 3000};
    CHECK(classify(f, RuleConfig{}).name == patterns::kStationary);
  }
}

TEST_CASE("classify is total over random features") {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(0, 1), kn(0, 25);
  std::bernoulli_distribution coin(0.5);
  const auto& tax = behavior_taxonomy();
  for (int i = 0; i < 2000; ++i) {
    SegmentFeatures f;
    if (coin(rng)) {
      f.mean_sog = kn(rng);
      f.start_sog = kn(rng);
      f.end_sog = kn(rng);
      f.sog_std = kn(rng) / 5;
    }
    f.straightness = u(rng);
    f.total_course_change = u(rng) * 200;
    if (coin(rng)) f.end_port = PortProximity{"A", u(rng) * 6000, 3000};
    const auto& p = classify(f, RuleConfig{});
    CHECK(std::find(tax.begin(), tax.end(), p) != tax.end());
    CHECK(&classify(f, RuleConfig{}) == &p);
  }
}

TEST_CASE("features are invariant under time translation") {
  const auto recs = testing::sinusoid_track(1, 40, 30, 8, 500, 4000);
  const auto f = extract_features(recs, kAalborg);
  for (double shift : {3600.0, -86400.0 * 40, 12345.0}) {
    auto moved = recs;
    for (auto& r : moved) r.timestamp += from_seconds(shift);
    CHECK(extract_features(moved, kAalborg) == f);
  }
}

TEST_CASE("constant velocity tracks classify as transit from 4 kn") {
  const RuleBasedAbstractor abstractor;
  for (double kn : {4.0, 7.5, 12.0, 22.0})
    for (double brg : {0.0, 73.0, 181.0, 300.0}) {
      Segment seg;
      seg.records = testing::straight_track(1, 20, 60, kn, brg);
      const auto f = extract_features(seg, PortDirectory{});
      CHECK(f.straightness >= 1 - 1e-6);
      CHECK(abstractor.abstract(seg, PortDirectory{}).name == patterns::kTransit);
    }
}

TEST_CASE("rule and port files parse") {
  const auto r = RuleConfig::parse("# tuned\nport_speed_delta_kn = 2.5\n\ntransit_min_mean_sog_kn=5\n");
  CHECK(r.port_speed_delta_kn == 2.5);
  CHECK(r.transit_min_mean_sog_kn == 5);
  CHECK(r.stationary_max_mean_sog_kn == 0.5);
  CHECK_THROWS_AS(RuleConfig::parse("speed = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(RuleConfig::parse("port_speed_delta_kn = fast\n"), std::invalid_argument);
  CHECK(RuleConfig::load(std::string(VKG_SOURCE_DIR) + "/data/rules.conf") == RuleConfig{});

  const auto p = PortDirectory::parse("name,lat,lon,radius_m\n# comment\nAarhus,56.15,10.22,2500\n");
  REQUIRE(p.ports().size() == 1);
  CHECK(p.ports()[0] == Port{"Aarhus", 56.15, 10.22, 2500});
  CHECK_THROWS_AS(PortDirectory::parse("X,56,10,0\n"), std::invalid_argument);
  CHECK_THROWS_AS(PortDirectory::parse("X,56,10\n"), std::invalid_argument);
  const auto bundled = PortDirectory::load(std::string(VKG_SOURCE_DIR) + "/data/ports.csv");
  CHECK(bundled.ports().size() >= 5);
}

TEST_CASE("modal value ties break lexicographically") {
  const std::vector<std::string> v = {"b", "a", "b", "a", "c"};
  CHECK(modal_value(v) == "a");
  const std::vector<std::string> w = {"z", "y", "z"};
  CHECK(modal_value(w) == "z");
}

TEST_CASE("static encoding yields three attributes") {
  const std::vector<AisRecord> in_port = {make_record(1, 0, 57.2, 10.5, 8.0),
                                          make_record(1, 60, 57.05, 9.931, 2.0, std::nullopt, "Moored")};
  const auto attrs = encode_static_attrs(in_port, kAalborg);
  REQUIRE(attrs.size() == 3);
  CHECK(attrs[0] == StaticAttr{AttrClass::vessel_type, "Cargo"});
  CHECK(attrs[1] == StaticAttr{AttrClass::nav_status, "Moored"});
  CHECK(attrs[2] == StaticAttr{AttrClass::spatial_context, "near-port:Aalborg"});
  CHECK(spatial_context({56, 8}, {56, 8.1}, kAalborg) == kOpenSea);
  CHECK(spatial_context({57.05, 9.93}, {56, 8}, kAalborg) == "near-port:Aalborg");
  CHECK(spatial_context({57.05, 9.93}, {56, 8}, PortDirectory{}) == kOpenSea);
  const auto gap = testing::make_gap(in_port[0], in_port[1]);
  CHECK(encode_gap_attrs(gap, kAalborg)[2].display == "near-port:Aalborg");
  CHECK(encode_gap_attrs(gap, kAalborg)[1].display == "Under way using engine");
}

TEST_CASE("taxonomy lookups") {
  CHECK(behavior_taxonomy().size() == 6);
  CHECK(behavior_pattern(patterns::kDrift).name == patterns::kDrift);
  CHECK_THROWS_AS(behavior_pattern("Teleport"), std::invalid_argument);
}
