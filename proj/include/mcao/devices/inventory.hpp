#pragma once

#include <map>
#include <string>
#include <vector>

#include "mcao/devices/device.hpp"
#include "mcao/devices/loops.hpp"

namespace mcao {
class Config;
}

namespace mcao::devices {

struct ControllerInventory {
  ControllerId controller = ControllerId::Aom;
  std::map<DeviceKind, int> counts;
  std::vector<std::string> diagnostic_sensors;  // BTO diagnostic WFS cameras
};

struct InventoryConfig {
  ControllerInventory bto{ControllerId::BtoLlt, {}, {}};
  ControllerInventory aom{ControllerId::Aom, {}, {}};
  std::vector<LoopSpec> loops;
  std::map<std::string, double> sensor_bias;  // synthetic camera sensor offsets per channel

  static InventoryConfig defaults();
  // Keys devices.bto.<kind>, devices.aom.<kind>, devices.bto.cameras,
  // loop.<id>.{controller,rate_hz,sensor,actuator,kp,ki,setpoint,enabled}.
  static InventoryConfig from_config(const Config& cfg);

  std::vector<Device> build_devices() const;
};

struct InventoryCheck {
  bool pass = true;
  std::vector<std::string> diffs;  // e.g. "AOM PIEZO: 9 ≠ 10"
};

InventoryCheck verify_inventory(const InventoryConfig& cfg);

std::string device_name(ControllerId c, DeviceKind k, int index);

}  // namespace mcao::devices
