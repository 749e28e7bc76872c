// Keyboard steering: arrow keys bend the tip, b toggles the bracing legs,
// space fires a growth pulse. Duty and duration come from the UI sliders.

import { CommandMessage, formatCommand } from "./protocol.js";

export interface ControlSettings {
  steerDuty: number; // percent, steering spools
  steerDuration: number; // seconds
  growthDuty: number;
  growthDuration: number;
}

export interface CockpitMode {
  bracingEngaged: boolean;
}

export const DEFAULT_SETTINGS: ControlSettings = {
  steerDuty: 100,
  steerDuration: 10,
  growthDuty: 50,
  growthDuration: 2,
};

const MOTOR_LEFT = 0;
const MOTOR_RIGHT = 1;
const MOTOR_UP = 2;
const MOTOR_BRACE = 3;
const MOTOR_GROW = 4;

export function keyToCommand(
  key: string,
  mode: CockpitMode,
  settings: ControlSettings
): CommandMessage | null {
  switch (key) {
    case "ArrowLeft":
      return { motor: MOTOR_LEFT, pwm: settings.steerDuty, duration: settings.steerDuration };
    case "ArrowRight":
      return { motor: MOTOR_RIGHT, pwm: settings.steerDuty, duration: settings.steerDuration };
    case "ArrowUp":
      return { motor: MOTOR_UP, pwm: settings.steerDuty, duration: settings.steerDuration };
    case "b":
    case "B":
      // positive duty extends the legs, negative retracts them
      return {
        motor: MOTOR_BRACE,
        pwm: mode.bracingEngaged ? -100 : 100,
        duration: 1,
      };
    case " ":
    case "Space":
      return { motor: MOTOR_GROW, pwm: settings.growthDuty, duration: settings.growthDuration };
    default:
      return null;
  }
}

export function keyToWire(
  key: string,
  mode: CockpitMode,
  settings: ControlSettings
): string | null {
  const cmd = keyToCommand(key, mode, settings);
  return cmd === null ? null : formatCommand(cmd);
}
