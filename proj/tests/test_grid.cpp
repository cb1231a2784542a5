#include <gtest/gtest.h>

#include "support.hpp"
#include "ufls/grid.hpp"

using namespace ufls;

namespace {

const char* kTwoBus = R"({
  "name": "two", "mva_base": 100, "f_nominal_hz": 60,
  "buses": [{"id": 1, "kind": "generator"},
            {"id": 2, "kind": "load", "load_pu": 1.0, "shed_cap_pu": 0.4}],
  "lines": [{"from": 1, "to": 2, "susceptance": 10}],
  "machines": [{"bus": 1, "inertia": 8, "damping": 4, "gov_gain": 2, "gov_time_const": 2, "p_gen_pu": 1}]
})";

nlohmann::json two_bus() { return nlohmann::json::parse(kTwoBus); }

}  // namespace

TEST(Grid, ParsesMinimalCase) {
  const GridCase gc = parse_case(two_bus());
  EXPECT_EQ(gc.num_buses(), 2);
  EXPECT_EQ(gc.num_lines(), 1);
  EXPECT_EQ(gc.num_machines(), 1);
  EXPECT_DOUBLE_EQ(gc.total_load(), 1.0);
  EXPECT_TRUE(gc.buses[1].participates());
  EXPECT_FALSE(gc.buses[0].participates());
}

TEST(Grid, LaplacianIsSymmetricWithZeroRowSums) {
  for (const auto& name : test::bundled_cases()) {
    const GridCase gc = test::load_case(name);
    const Matrix L = laplacian(gc);
    EXPECT_LT((L - L.transpose()).cwiseAbs().maxCoeff(), 1e-12) << name;
    EXPECT_LT(L.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9) << name;
    const Matrix C = incidence_matrix(gc);
    Matrix W = Matrix::Zero(gc.num_lines(), gc.num_lines());
    for (int e = 0; e < gc.num_lines(); ++e) W(e, e) = gc.lines[e].susceptance;
    EXPECT_LT((C * W * C.transpose() - L).cwiseAbs().maxCoeff(), 1e-9) << name;
  }
}

TEST(Grid, ParallelCircuitsMerge) {
  auto j = two_bus();
  j["lines"].push_back({{"from", 2}, {"to", 1}, {"susceptance", 5}, {"circuit", 2}});
  const GridCase gc = parse_case(j);
  ASSERT_EQ(gc.num_lines(), 1);
  EXPECT_DOUBLE_EQ(gc.lines[0].susceptance, 15.0);
}

TEST(Grid, RejectsDuplicateCircuit) {
  auto j = two_bus();
  j["lines"].push_back({{"from", 2}, {"to", 1}, {"susceptance", 5}});
  EXPECT_THROW(parse_case(j), ValidationError);
}

TEST(Grid, RejectsBadInput) {
  auto bad = [](auto edit) {
    auto j = two_bus();
    edit(j);
    return j;
  };
  EXPECT_THROW(parse_case(bad([](auto& j) { j["lines"][0]["to"] = 7; })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j["lines"][0]["susceptance"] = -1; })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j["buses"][1]["shed_cap_pu"] = 2.0; })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j["buses"][1]["kind"] = "slack"; })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j["machines"][0]["inertia"] = 0; })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j["lines"] = nlohmann::json::array(); })), ValidationError);
  EXPECT_THROW(parse_case(bad([](auto& j) { j.erase("buses"); })), ValidationError);
  EXPECT_THROW(parse_case_string("{not json"), ValidationError);
}

TEST(Grid, CanonicalFormRoundTrips) {
  for (const auto& name : test::bundled_cases()) {
    const GridCase gc = test::load_case(name);
    const GridCase again = parse_case_string(serialize_case(gc));
    EXPECT_EQ(serialize_case(again), serialize_case(gc)) << name;
    EXPECT_TRUE(again.buses == gc.buses) << name;
    EXPECT_TRUE(again.lines == gc.lines) << name;
    EXPECT_TRUE(again.machines == gc.machines) << name;
  }
}

TEST(Grid, LineFlowsBalanceInjections) {
  const GridCase gc = test::load_case("wecc9");
  Vector theta(gc.num_buses());
  for (int b = 0; b < gc.num_buses(); ++b) theta[b] = 0.01 * (b * b % 7) - 0.02;
  const Vector flows = line_flows(gc, theta);
  const Vector injection = incidence_matrix(gc) * flows;
  EXPECT_LT((injection - laplacian(gc) * theta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Grid, Ieee39Shape) {
  const GridCase gc = test::load_case("ieee39");
  EXPECT_EQ(gc.num_buses(), 39);
  EXPECT_EQ(gc.num_machines(), 10);
  EXPECT_EQ(static_cast<int>(gc.participating_buses().size()), 20);
  // dispatch covers the load to within the network losses of the source data
  EXPECT_NEAR(gc.total_generation(), gc.total_load(), 0.01 * gc.total_load());
}
