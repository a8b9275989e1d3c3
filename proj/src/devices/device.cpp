#include "mcao/devices/device.hpp"

#include <algorithm>
#include <cmath>

#include "mcao/core/errors.hpp"

namespace mcao::devices {

const char* to_string(ControllerId c) { return c == ControllerId::Aom ? "AOM" : "BTO"; }

const char* to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::Servo: return "SERVO";
    case DeviceKind::Dc: return "DC";
    case DeviceKind::Ac: return "AC";
    case DeviceKind::Stepper: return "STEPPER";
    case DeviceKind::Piezo: return "PIEZO";
  }
  return "?";
}

const char* to_string(DeviceState s) {
  switch (s) {
    case DeviceState::Idle: return "IDLE";
    case DeviceState::Moving: return "MOVING";
    case DeviceState::Fault: return "FAULT";
    case DeviceState::Uninitialized: return "UNINITIALIZED";
  }
  return "?";
}

const char* to_string(DeviceVerb v) {
  switch (v) {
    case DeviceVerb::Init: return "INIT";
    case DeviceVerb::Datum: return "DATUM";
    case DeviceVerb::Move: return "MOVE";
    case DeviceVerb::Stop: return "STOP";
    case DeviceVerb::Reset: return "RESET";
  }
  return "?";
}

std::optional<DeviceVerb> parse_device_verb(std::string_view s) {
  for (auto v : {DeviceVerb::Init, DeviceVerb::Datum, DeviceVerb::Move, DeviceVerb::Stop, DeviceVerb::Reset})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

double default_velocity_limit(DeviceKind k) {
  switch (k) {
    case DeviceKind::Servo: return 5.0;
    case DeviceKind::Dc: return 2.0;
    case DeviceKind::Ac: return 10.0;
    case DeviceKind::Stepper: return 1.0;
    case DeviceKind::Piezo: return 100.0;
  }
  return 1.0;
}

Device step_device(Device dev, double dt) {
  if (!(dt > 0)) throw UsageError("step_device needs dt > 0");
  if (dev.state == DeviceState::Uninitialized || dev.state == DeviceState::Fault) return dev;
  const double max_step = dev.velocity_limit * dt;
  const double delta = dev.target - dev.position;
  if (std::abs(delta) <= max_step)
    dev.position = dev.target;
  else
    dev.position += std::copysign(max_step, delta);
  dev.state = std::abs(dev.target - dev.position) > dev.deadband ? DeviceState::Moving : DeviceState::Idle;
  return dev;
}

namespace {

void set_target(Device& dev, double t) {
  dev.target = t;
  dev.state = std::abs(dev.target - dev.position) > dev.deadband ? DeviceState::Moving : DeviceState::Idle;
}

}  // namespace

CommandAck device_command(Device& dev, DeviceVerb verb, double value) {
  switch (verb) {
    case DeviceVerb::Init:
      if (dev.state == DeviceState::Fault) return {false, dev.id + ": FAULT, RESET first"};
      if (dev.state == DeviceState::Uninitialized) {
        dev.target = dev.position;
        dev.state = DeviceState::Idle;
      }
      return {};
    case DeviceVerb::Reset:
      if (dev.state == DeviceState::Fault) {
        dev.target = dev.position;
        dev.state = DeviceState::Idle;
      }
      return {};
    case DeviceVerb::Stop:
      if (dev.state == DeviceState::Uninitialized || dev.state == DeviceState::Fault) return {};
      dev.target = dev.position;  // state settles to IDLE on the next step
      return {};
    case DeviceVerb::Datum:
    case DeviceVerb::Move:
      break;
  }
  if (dev.state == DeviceState::Uninitialized) return {false, dev.id + ": state UNINITIALIZED"};
  if (dev.state == DeviceState::Fault) return {false, dev.id + ": state FAULT"};
  if (verb == DeviceVerb::Move && !std::isfinite(value)) return {false, dev.id + ": non-finite target"};
  set_target(dev, verb == DeviceVerb::Datum ? 0.0 : value);
  return {};
}

void inject_fault(Device& dev) {
  dev.target = dev.position;
  dev.state = DeviceState::Fault;
}

}  // namespace mcao::devices
