#include <catch2/catch_amalgamated.hpp>

#include "gridweave/core.hpp"
#include "gridweave/rng.hpp"

using namespace gridweave;

namespace {

BatteryParams make_battery(double capacity = 1.0, double efficiency = 1.0) {
    BatteryParams b;
    b.capacity = capacity;
    b.efficiency = efficiency;
    b.soc_min = 0.1;
    b.soc_max = 0.9;
    b.p_charge_max = 0.8;
    b.p_discharge_max = 0.8;
    return b;
}

} // namespace

TEST_CASE("battery_step clips charging at soc_max", "[core]") {
    auto b = make_battery();
    BatteryState s{0.5};
    auto r = battery_step(s, b, 0.8);
    CHECK(r.state.soc == Catch::Approx(0.9).margin(1e-15));
    CHECK(r.e_batt == Catch::Approx(0.4).margin(1e-15));
    CHECK(r.projected > 0.0);
}

TEST_CASE("battery_step does nothing on an empty battery", "[core]") {
    auto b = make_battery();
    BatteryState s{0.1};
    auto r = battery_step(s, b, -0.5);
    CHECK(r.state.soc == 0.1);
    CHECK(r.e_batt == 0.0);
}

TEST_CASE("battery_step charges through one-way efficiency", "[core]") {
    auto b = make_battery(1.0, 0.9);
    BatteryState s{0.5};
    auto r = battery_step(s, b, 0.2);
    CHECK(r.state.soc == Catch::Approx(0.68).margin(1e-15));
    CHECK(r.e_batt == Catch::Approx(0.2).margin(1e-15));
}

TEST_CASE("battery_step ignores capacity-zero batteries", "[core]") {
    auto b = make_battery(0.0);
    auto r = battery_step(BatteryState{0.5}, b, 0.7);
    CHECK(r.e_batt == 0.0);
    CHECK(r.state.soc == 0.5);
}

TEST_CASE("battery_step keeps soc within bounds for random commands", "[core]") {
    rng::SplitMix64 g(42);
    for (int trial = 0; trial < 200; ++trial) {
        BatteryParams b;
        b.capacity = g.uniform(0.1, 2.0);
        b.efficiency = g.uniform(0.5, 1.0);
        b.soc_min = g.uniform(0.0, 0.4);
        b.soc_max = g.uniform(0.6, 1.0);
        b.p_charge_max = g.uniform(0.0, 1.5);
        b.p_discharge_max = g.uniform(0.0, 1.5);
        BatteryState s{g.uniform(b.soc_min, b.soc_max)};
        for (int step = 0; step < 24; ++step) {
            auto r = battery_step(s, b, g.uniform(-2.0, 2.0));
            REQUIRE(r.state.soc >= b.soc_min - 1e-12);
            REQUIRE(r.state.soc <= b.soc_max + 1e-12);
            s = r.state;
        }
    }
}

TEST_CASE("lossless charge then discharge restores soc exactly", "[core]") {
    auto b = make_battery(1.0, 1.0);
    BatteryState s{0.5};
    auto up = battery_step(s, b, 0.25);
    auto down = battery_step(up.state, b, -0.25);
    CHECK(down.state.soc == 0.5);
    CHECK(up.e_batt == -down.e_batt);

    rng::SplitMix64 g(13);
    for (int trial = 0; trial < 100; ++trial) {
        BatteryState st{g.uniform(0.3, 0.6)};
        double cmd = g.uniform(0.0, 0.2);
        auto u = battery_step(st, b, cmd);
        auto d = battery_step(u.state, b, -cmd);
        REQUIRE(d.state.soc == Catch::Approx(st.soc).margin(1e-15));
    }
}

TEST_CASE("household_net classifies shortage and surplus", "[core]") {
    CHECK(household_net(0.5, 0.3, 0.1) == Catch::Approx(0.3));
    CHECK(household_net(0.2, 0.6, 0.0) == Catch::Approx(-0.4));
    CHECK(household_net(0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("make_balance satisfies the net identity", "[core]") {
    rng::SplitMix64 g(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto b = make_balance(g.uniform(0.0, 2.0), g.uniform(0.0, 2.0),
                              g.uniform(-1.0, 1.0));
        REQUIRE(b.e_net == Catch::Approx(b.e_load - b.e_pv + b.e_batt).margin(1e-12));
        REQUIRE(b.e_net == Catch::Approx(b.e_shortage - b.e_surplus).margin(1e-12));
        REQUIRE(b.e_shortage * b.e_surplus == 0.0);
        REQUIRE(b.e_shortage >= 0.0);
        REQUIRE(b.e_surplus >= 0.0);
    }
}

TEST_CASE("household_cost splits grid imports into price and emission", "[core]") {
    PriceSet p;
    p.r_sd = 0.5;
    p.c_t = 0.1;
    EnergyBalance b = make_balance(1.0, 0.0, 0.0);
    b.imp3 = 1.0;
    auto cost = household_cost(b, p);
    CHECK(cost.price == Catch::Approx(0.5));
    CHECK(cost.emission == Catch::Approx(0.1));
    CHECK(cost.scalar() == Catch::Approx(0.6));
}

TEST_CASE("household_cost treats surplus revenue by mode", "[core]") {
    PriceSet p;
    p.r_bm = 0.2;
    EnergyBalance b = make_balance(0.0, 2.0, 0.0);
    b.exp2 = 2.0;
    CHECK(household_cost(b, p, CostMode::economic).scalar() == Catch::Approx(-0.4));
    CHECK(household_cost(b, p, CostMode::literal).scalar() == Catch::Approx(0.4));
}

TEST_CASE("household_cost of an all-zero balance is zero", "[core]") {
    CHECK(household_cost(EnergyBalance{}, PriceSet{}).scalar() == 0.0);
}

TEST_CASE("household_cost is monotone in import and export quantities", "[core]") {
    rng::SplitMix64 g(11);
    for (int trial = 0; trial < 100; ++trial) {
        PriceSet p;
        p.r_sh = g.uniform(0.0, 1.0);
        p.r_sm = g.uniform(0.0, 1.0);
        p.r_sd = g.uniform(0.0, 1.0);
        p.r_bh = g.uniform(0.0, 1.0);
        p.r_bm = g.uniform(0.0, 1.0);
        p.r_bd = g.uniform(0.0, 1.0);
        p.c_t = g.uniform(0.0, 0.5);

        EnergyBalance shortage = make_balance(1.0, 0.0, 0.0);
        shortage.imp1 = g.uniform(0.0, 0.4);
        shortage.imp2 = g.uniform(0.0, 0.3);
        shortage.imp3 = 1.0 - shortage.imp1 - shortage.imp2;
        double base = household_cost(shortage, p).scalar();
        EnergyBalance more = shortage;
        more.e_load += 0.1;
        more.e_net += 0.1;
        more.e_shortage += 0.1;
        more.imp2 += 0.1;
        REQUIRE(household_cost(more, p).scalar() >= base - 1e-12);

        EnergyBalance surplus = make_balance(0.0, 1.0, 0.0);
        surplus.exp1 = g.uniform(0.0, 0.4);
        surplus.exp3 = 1.0 - surplus.exp1;
        double base_s = household_cost(surplus, p).scalar();
        EnergyBalance more_s = surplus;
        more_s.e_pv += 0.1;
        more_s.e_net -= 0.1;
        more_s.e_surplus += 0.1;
        more_s.exp1 += 0.1;
        REQUIRE(household_cost(more_s, p).scalar() <= base_s + 1e-12);
    }
}

TEST_CASE("aggregate_microgrid sums household channels", "[core]") {
    EnergyBalance a = make_balance(0.2, 0.0, 0.0);
    a.imp3 = 0.2;
    EnergyBalance b = make_balance(0.3, 0.0, 0.0);
    b.imp3 = 0.3;
    std::vector<EnergyBalance> houses{a, b};
    auto m = aggregate_microgrid(houses);
    CHECK(m.imp3 == Catch::Approx(0.5));
    CHECK(m.e_net == Catch::Approx(0.5));
    CHECK(m.e_surplus == 0.0);
}

TEST_CASE("aggregate_microgrid of nothing is zero", "[core]") {
    auto m = aggregate_microgrid(std::vector<EnergyBalance>{});
    CHECK(m.e_shortage == 0.0);
    CHECK(m.e_surplus == 0.0);
    CHECK(m.e_net == 0.0);
}

TEST_CASE("aggregate_microgrid nets mixed import and export", "[core]") {
    EnergyBalance a = make_balance(0.1, 0.0, 0.0);
    a.imp2 = 0.1;
    EnergyBalance b = make_balance(0.0, 0.1, 0.0);
    b.exp2 = 0.1;
    std::vector<EnergyBalance> houses{a, b};
    auto m = aggregate_microgrid(houses);
    CHECK(m.imp2 == Catch::Approx(0.1));
    CHECK(m.exp2 == Catch::Approx(0.1));
    CHECK(m.e_net == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("microgrid_cost prices both branches", "[core]") {
    PriceSet p;
    p.r_sd = 0.4;
    p.c_t = 0.1;
    p.r_bm = 0.2;
    CHECK(microgrid_cost(MicrogridBalance{}, p) == 0.0);

    MicrogridBalance shortage;
    shortage.imp3 = 1.0;
    shortage.e_shortage = 1.0;
    shortage.e_net = 1.0;
    CHECK(microgrid_cost(shortage, p) == Catch::Approx(0.5));

    MicrogridBalance surplus;
    surplus.exp2 = 1.0;
    surplus.e_surplus = 1.0;
    surplus.e_net = -1.0;
    CHECK(microgrid_cost(surplus, p, CostMode::economic) == Catch::Approx(-0.2));
    CHECK(microgrid_cost(surplus, p, CostMode::literal) == Catch::Approx(0.2));
}

TEST_CASE("aggregate_distributor and its cost follow the top-layer sums", "[core]") {
    PriceSet p;
    p.r_sd = 0.4;
    p.c_t = 0.1;

    CHECK(distributor_cost(DistributorBalance{}, p) == 0.0);

    MicrogridBalance m1;
    m1.imp3 = 1.0;
    m1.e_shortage = 1.0;
    m1.e_net = 1.0;
    std::vector<MicrogridBalance> one{m1};
    auto d1 = aggregate_distributor(one);
    CHECK(d1.e_shortage == Catch::Approx(1.0));
    CHECK(distributor_cost(d1, p) == Catch::Approx(0.5));

    MicrogridBalance m2;
    m2.exp3 = 0.1;
    m2.e_surplus = 0.1;
    m2.e_net = -0.1;
    MicrogridBalance m3;
    m3.imp3 = 0.4;
    m3.e_shortage = 0.4;
    m3.e_net = 0.4;
    std::vector<MicrogridBalance> two{m3, m2};
    auto d2 = aggregate_distributor(two);
    CHECK(d2.imp3 == Catch::Approx(0.4));
    CHECK(d2.exp3 == Catch::Approx(0.1));
    CHECK(d2.e_net == Catch::Approx(0.3));
}

TEST_CASE("battery params validation rejects bad bounds", "[core]") {
    auto b = make_battery();
    b.soc_min = 0.9;
    b.soc_max = 0.1;
    CHECK_THROWS_AS(b.validate(), ConfigError);
    b = make_battery();
    b.efficiency = 0.0;
    CHECK_THROWS_AS(b.validate(), ConfigError);
    b = make_battery();
    b.p_charge_max = -0.1;
    CHECK_THROWS_AS(b.validate(), ConfigError);
}
