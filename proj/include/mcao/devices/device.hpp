#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mcao::devices {

enum class ControllerId { Aom, BtoLlt };
enum class DeviceKind { Servo, Dc, Ac, Stepper, Piezo };
enum class DeviceState { Idle, Moving, Fault, Uninitialized };
enum class DeviceVerb { Init, Datum, Move, Stop, Reset };

const char* to_string(ControllerId c);
const char* to_string(DeviceKind k);
const char* to_string(DeviceState s);
const char* to_string(DeviceVerb v);
std::optional<DeviceVerb> parse_device_verb(std::string_view s);

struct Device {
  std::string id;
  ControllerId controller = ControllerId::Aom;
  DeviceKind kind = DeviceKind::Servo;
  double position = 0.0;
  double target = 0.0;
  double velocity_limit = 1.0;  // units/s
  double deadband = 1e-9;
  DeviceState state = DeviceState::Uninitialized;

  bool ready() const { return state == DeviceState::Idle; }
};

double default_velocity_limit(DeviceKind k);

// Instant acceleration, speed capped at the velocity limit. Throws UsageError for dt <= 0.
Device step_device(Device dev, double dt);

struct CommandAck {
  bool accepted = true;
  std::string detail;
};

// value is the MOVE target; other verbs ignore it.
CommandAck device_command(Device& dev, DeviceVerb verb, double value = 0.0);

// Simulated hardware fault: the device stops and ignores targets until RESET.
void inject_fault(Device& dev);

}  // namespace mcao::devices
