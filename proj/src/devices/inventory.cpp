#include "mcao/devices/inventory.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "mcao/core/config.hpp"
#include "mcao/core/errors.hpp"

namespace mcao::devices {

namespace {

constexpr DeviceKind kKinds[] = {DeviceKind::Servo, DeviceKind::Dc, DeviceKind::Ac, DeviceKind::Stepper,
                                 DeviceKind::Piezo};

const std::map<DeviceKind, int> kBtoCounts{{DeviceKind::Servo, 27}, {DeviceKind::Ac, 3},
                                           {DeviceKind::Stepper, 2}, {DeviceKind::Piezo, 10}};
const std::map<DeviceKind, int> kAomCounts{{DeviceKind::Servo, 32}, {DeviceKind::Dc, 9}, {DeviceKind::Piezo, 10}};
constexpr int kBtoCameras = 2;
constexpr int kBtoLoops = 4, kBtoFastLoops = 1, kAomLoops = 5;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int count_of(const ControllerInventory& inv, DeviceKind k) {
  auto it = inv.counts.find(k);
  return it == inv.counts.end() ? 0 : it->second;
}

ControllerId parse_controller(const std::string& s) {
  if (s == "AOM" || s == "aom") return ControllerId::Aom;
  if (s == "BTO" || s == "bto" || s == "BTO_LLT") return ControllerId::BtoLlt;
  throw ConfigError("unknown controller '" + s + "'");
}

}  // namespace

std::string device_name(ControllerId c, DeviceKind k, int index) {
  return fmt::format("{}.{}.{:02d}", lower(to_string(c)), lower(to_string(k)), index);
}

InventoryConfig InventoryConfig::defaults() {
  InventoryConfig c;
  c.bto.counts = kBtoCounts;
  c.aom.counts = kAomCounts;
  c.bto.diagnostic_sensors = {"bto.cam1", "bto.cam2"};
  // Loop wiring is an invented assignment; the fast loop steers the beam from the RTC offload.
  const auto bto = ControllerId::BtoLlt, aom = ControllerId::Aom;
  c.loops = {
      {"bto.fast_steering", bto, 800.0, "rtc.offload.x", "bto.piezo.01", 0.5, 0.1, 0.0, true},
      {"bto.beam_centering", bto, 1.0, "bto.cam1.x", "bto.servo.01", 0.5, 0.1, 0.0, true},
      {"bto.beam_pointing", bto, 1.0, "bto.cam2.x", "bto.servo.02", 0.5, 0.1, 0.0, true},
      {"bto.llt_focus", bto, 0.1, "bto.cam2.focus", "bto.stepper.01", 0.5, 0.1, 0.0, true},
      {"aom.ttm_offload", aom, 1.0, "aom.ttm_mean", "aom.servo.01", 0.5, 0.1, 0.0, true},
      {"aom.lgs_focus", aom, 0.1, "aom.lgs_focus", "aom.dc.01", 0.5, 0.1, 0.0, true},
      {"aom.ngs_flexure_x", aom, 1.0, "aom.ngs_flexure.x", "aom.servo.02", 0.5, 0.1, 0.0, true},
      {"aom.ngs_flexure_y", aom, 1.0, "aom.ngs_flexure.y", "aom.servo.03", 0.5, 0.1, 0.0, true},
      {"aom.dm_offload", aom, 0.1, "aom.dm_mean", "aom.piezo.01", 0.5, 0.1, 0.0, true},
  };
  return c;
}

InventoryConfig InventoryConfig::from_config(const Config& cfg) {
  InventoryConfig c = defaults();
  for (auto k : kKinds) {
    const std::string kind = lower(to_string(k));
    const auto b = cfg.get_int("devices.bto." + kind, count_of(c.bto, k));
    const auto a = cfg.get_int("devices.aom." + kind, count_of(c.aom, k));
    if (b < 0 || a < 0) throw ConfigError("device counts must be non-negative");
    c.bto.counts[k] = static_cast<int>(b);
    c.aom.counts[k] = static_cast<int>(a);
  }
  const auto cams = cfg.get_int("devices.bto.cameras", static_cast<long long>(c.bto.diagnostic_sensors.size()));
  c.bto.diagnostic_sensors.clear();
  for (long long i = 1; i <= cams; ++i) c.bto.diagnostic_sensors.push_back(fmt::format("bto.cam{}", i));

  for (auto& l : c.loops) {
    const std::string p = "loop." + l.id + ".";
    l.controller = parse_controller(cfg.get_string(p + "controller", to_string(l.controller)));
    l.rate_hz = cfg.get_double(p + "rate_hz", l.rate_hz);
    l.sensor = cfg.get_string(p + "sensor", l.sensor);
    l.actuator = cfg.get_string(p + "actuator", l.actuator);
    l.kp = cfg.get_double(p + "kp", l.kp);
    l.ki = cfg.get_double(p + "ki", l.ki);
    l.setpoint = cfg.get_double(p + "setpoint", l.setpoint);
    l.enabled = cfg.get_bool(p + "enabled", l.enabled);
  }
  for (const auto& key : cfg.keys_with_prefix("devices.bias."))
    c.sensor_bias[key.substr(13)] = cfg.get_double(key, 0.0);
  return c;
}

std::vector<Device> InventoryConfig::build_devices() const {
  std::vector<Device> out;
  for (const auto* inv : {&bto, &aom})
    for (auto k : kKinds)
      for (int i = 1; i <= count_of(*inv, k); ++i) {
        Device d;
        d.id = device_name(inv->controller, k, i);
        d.controller = inv->controller;
        d.kind = k;
        d.velocity_limit = default_velocity_limit(k);
        out.push_back(d);
      }
  return out;
}

InventoryCheck verify_inventory(const InventoryConfig& cfg) {
  InventoryCheck r;
  auto diff = [&](const std::string& what, long long got, long long want) {
    if (got != want) {
      r.pass = false;
      r.diffs.push_back(fmt::format("{}: {} ≠ {}", what, got, want));
    }
  };
  for (const auto& [inv, want] : {std::pair{&cfg.bto, &kBtoCounts}, std::pair{&cfg.aom, &kAomCounts}})
    for (auto k : kKinds) {
      auto it = want->find(k);
      diff(fmt::format("{} {}", to_string(inv->controller), to_string(k)), count_of(*inv, k),
           it == want->end() ? 0 : it->second);
    }
  diff("BTO CAMERA", static_cast<long long>(cfg.bto.diagnostic_sensors.size()), kBtoCameras);

  auto loops = [&](ControllerId c, bool fast) {
    return std::count_if(cfg.loops.begin(), cfg.loops.end(), [&](const LoopSpec& l) {
      return l.controller == c && (l.rate_hz == 800.0) == fast;
    });
  };
  diff("BTO LOOPS", loops(ControllerId::BtoLlt, true) + loops(ControllerId::BtoLlt, false), kBtoLoops);
  diff("BTO FAST LOOPS", loops(ControllerId::BtoLlt, true), kBtoFastLoops);
  diff("AOM SLOW LOOPS", loops(ControllerId::Aom, false), kAomLoops);
  diff("AOM FAST LOOPS", loops(ControllerId::Aom, true), 0);
  for (const auto& l : cfg.loops)
    if (l.rate_hz != 0.1 && l.rate_hz != 1.0 && l.rate_hz != 800.0) {
      r.pass = false;
      r.diffs.push_back(fmt::format("loop {} rate {} Hz", l.id, l.rate_hz));
    }
  return r;
}

}  // namespace mcao::devices
