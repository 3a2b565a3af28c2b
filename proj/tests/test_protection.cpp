#include <doctest.h>

#include <random>
#include <stdexcept>

#include "dgrel/protection.hpp"
#include "support.hpp"

using namespace dgrel;
using testsupport::reference;

namespace {

DeviceSpec relay(DeviceKind kind, std::vector<double> program = {}) {
  DeviceSpec d;
  d.id = "R";
  d.kind = kind;
  d.pickup_a = 100.0;
  d.curve = TccCurve{{{1.0, 10.0}, {10.0, 0.1}}};
  d.reclose_program = std::move(program);
  return d;
}

const DeviceSpec& ref_device(const std::string& id) { return reference().devices[*reference().device_index(id)]; }

}  // namespace

TEST_SUITE("protection") {
  TEST_CASE("operate time adds the interrupting delay") {
    auto d = relay(DeviceKind::breaker);
    d.interrupt_delay_s = 0.02;
    CHECK(device_operate_time(d, 5000.0).value() == doctest::Approx(0.12));
    CHECK_FALSE(device_operate_time(d, 50.0).has_value());
  }

  TEST_CASE("damage is additive across intervals") {
    const auto d = relay(DeviceKind::fuse);
    DeviceRuntime a(d), b(d);
    const double t = *device_operate_time(d, 1000.0);
    accumulate_damage(a, 1000.0, 0.3 * t);
    accumulate_damage(a, 1000.0, 0.2 * t);
    accumulate_damage(b, 1000.0, 0.5 * t);
    CHECK(a.damage == doctest::Approx(b.damage));
    CHECK(a.damage == doctest::Approx(0.5));
    CHECK(time_to_trip(a, 1000.0).value() == doctest::Approx(0.5 * t));
  }

  TEST_CASE("fuses keep damage; relays reset below their curve") {
    const auto f = relay(DeviceKind::fuse);
    const auto r = relay(DeviceKind::recloser, {1.0});
    DeviceRuntime fr(f), rr(r);
    accumulate_damage(fr, 500.0, 0.1);
    accumulate_damage(rr, 500.0, 0.1);
    const double before = fr.damage;
    CHECK(before > 0.0);
    accumulate_damage(fr, 20.0, 5.0);
    accumulate_damage(rr, 20.0, 5.0);
    CHECK(fr.damage == before);
    CHECK(rr.damage == 0.0);
  }

  TEST_CASE("open devices accumulate nothing and have no trip time") {
    DeviceRuntime rt(relay(DeviceKind::fuse));
    const auto spec = relay(DeviceKind::fuse);
    DeviceRuntime open(spec);
    on_open(open, 0.0);
    accumulate_damage(open, 5000.0, 1.0);
    CHECK(open.damage == 0.0);
    CHECK_FALSE(time_to_trip(open, 5000.0).has_value());
  }

  TEST_CASE("breaker recloses 30 s plus the dead time after opening") {
    DeviceRuntime rt(ref_device("02"));
    on_open(rt, 0.25);
    REQUIRE(rt.scheduled_reclose_at.has_value());
    CHECK(*rt.scheduled_reclose_at == doctest::Approx(30.65));
    CHECK_FALSE(rt.lockout);
    CHECK_THROWS_AS(on_open(rt, 0.3), std::logic_error);
  }

  TEST_CASE("dead time adds to a short programmed wait") {
    const auto d = relay(DeviceKind::recloser, {0.1});
    DeviceRuntime rt(d);
    on_open(rt, 1.0);
    CHECK(*rt.scheduled_reclose_at == doctest::Approx(1.5));
  }

  TEST_CASE("a fuse locks out on its first operation") {
    DeviceRuntime rt(ref_device("04"));
    on_open(rt, 0.3);
    CHECK(rt.lockout);
    CHECK_FALSE(rt.scheduled_reclose_at.has_value());
    CHECK_THROWS_AS(on_reclose(rt), std::logic_error);
  }

  TEST_CASE("recloser 03 locks out on its second opening") {
    DeviceRuntime rt(ref_device("03"));
    on_open(rt, 0.3);
    CHECK_FALSE(rt.lockout);
    on_reclose(rt);
    CHECK_FALSE(rt.is_open);
    on_open(rt, 200.0);
    CHECK(rt.lockout);
  }

  TEST_CASE("randomized operation sequences respect the state machine") {
    std::mt19937_64 rng(21);
    for (const auto& d : reference().devices) {
      for (int trial = 0; trial < 50; ++trial) {
        DeviceRuntime rt(d);
        double now = 0.0;
        int opens = 0;
        for (int step = 0; step < 12; ++step) {
          now += 0.01 + static_cast<double>(rng() % 1000) / 10.0;
          if (!rt.is_open) {
            on_open(rt, now);
            ++opens;
            CHECK(rt.reclose_index == opens);
          } else if (rt.lockout) {
            CHECK_THROWS_AS(on_reclose(rt), std::logic_error);
            break;
          } else {
            REQUIRE(rt.scheduled_reclose_at.has_value());
            CHECK(*rt.scheduled_reclose_at >= now - 100.0);
            on_reclose(rt);
          }
          // a locked-out device is open and has nothing scheduled
          if (rt.lockout) {
            CHECK(rt.is_open);
            CHECK_FALSE(rt.scheduled_reclose_at.has_value());
          }
          CHECK(opens <= static_cast<int>(d.reclose_program.size()) + 1);
        }
        if (d.kind == DeviceKind::fuse) CHECK(opens == 1);
        else CHECK(opens == static_cast<int>(d.reclose_program.size()) + 1);
      }
    }
  }

  TEST_CASE("directional relays only permit forward current") {
    const auto up = apply_device_mode(reference(), DeviceMode::directional);
    const auto& d = up.devices[*up.device_index("05")];
    CHECK(directional_permits(d, {400.0, true, {}}));
    CHECK_FALSE(directional_permits(d, {400.0, false, {}}));
    CHECK_FALSE(directional_permits(d, {0.0, true, {}}));
    CHECK(directional_permits(ref_device("05"), {400.0, false, {}}));
  }

  TEST_CASE("DG islanding protection trips after its delay") {
    DgProtectionSettings s;
    DgProtectionState st;
    auto d = dg_protection_step(s, st, true, 1.0, 0.3);
    CHECK_FALSE(d.trip);
    CHECK(d.trip_at.value() == doctest::Approx(0.46));
    d = dg_protection_step(s, st, true, 1.0, 0.46);
    CHECK(d.trip);
    CHECK_FALSE(st.online);
    CHECK_FALSE(dg_protection_step(s, st, true, 1.0, 1.0).trip);
  }

  TEST_CASE("DG overcurrent timer restarts when current drops") {
    DgProtectionSettings s;
    DgProtectionState st;
    CHECK(dg_protection_step(s, st, false, 3.5, 0.2).trip_at.value() == doctest::Approx(1.2));
    CHECK_FALSE(dg_protection_step(s, st, false, 1.0, 0.5).trip_at.has_value());
    CHECK(dg_protection_step(s, st, false, 4.0, 0.7).trip_at.value() == doctest::Approx(1.7));
    CHECK(dg_protection_step(s, st, false, 4.0, 1.7).trip);
  }

  TEST_CASE("the earlier of the two DG timers wins") {
    DgProtectionSettings s;
    DgProtectionState st;
    dg_protection_step(s, st, false, 5.0, 0.0);
    CHECK(dg_protection_step(s, st, true, 5.0, 0.95).trip_at.value() == doctest::Approx(1.0));
  }
}
