use serde::{Deserialize, Serialize};

use crate::math::{Vec3, Vec4};

/// Mass-normalized collective thrust and body rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ctbr {
    /// m/s^2
    pub collective: f64,
    /// rad/s, body frame
    pub body_rates: Vec3,
}

impl Ctbr {
    pub fn new(collective: f64, body_rates: Vec3) -> Self {
        Self {
            collective,
            body_rates,
        }
    }
}

/// One of the four supported control interfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Command {
    /// Single-rotor thrusts, N.
    Srt { thrusts: Vec4 },
    Ctbr(Ctbr),
    /// World position setpoint (m) and yaw (rad).
    Ps { position: Vec3, yaw: f64 },
    /// World velocity setpoint (m/s) and yaw (rad).
    Lv { velocity: Vec3, yaw: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandType {
    Srt,
    Ctbr,
    Ps,
    Lv,
}

impl std::fmt::Display for CommandType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CommandType::Srt => "srt",
            CommandType::Ctbr => "ctbr",
            CommandType::Ps => "ps",
            CommandType::Lv => "lv",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error("command contains a non-finite value")]
    NonFinite,
    #[error("collective thrust must be non-negative, got {0}")]
    NegativeCollective(f64),
}

impl Command {
    pub fn command_type(&self) -> CommandType {
        match self {
            Command::Srt { .. } => CommandType::Srt,
            Command::Ctbr(_) => CommandType::Ctbr,
            Command::Ps { .. } => CommandType::Ps,
            Command::Lv { .. } => CommandType::Lv,
        }
    }

    /// Fixed-width encoding: `[f1..f4]`, `[c, wx, wy, wz]`, `[x, y, z, yaw]`
    /// or `[vx, vy, vz, yaw]`.
    pub fn to_flat(&self) -> [f64; 4] {
        match *self {
            Command::Srt { thrusts } => [thrusts[0], thrusts[1], thrusts[2], thrusts[3]],
            Command::Ctbr(c) => [c.collective, c.body_rates.x, c.body_rates.y, c.body_rates.z],
            Command::Ps { position: p, yaw } => [p.x, p.y, p.z, yaw],
            Command::Lv { velocity: v, yaw } => [v.x, v.y, v.z, yaw],
        }
    }

    pub fn from_flat(kind: CommandType, a: [f64; 4]) -> Self {
        match kind {
            CommandType::Srt => Command::Srt {
                thrusts: Vec4::from(a),
            },
            CommandType::Ctbr => Command::Ctbr(Ctbr::new(a[0], Vec3::new(a[1], a[2], a[3]))),
            CommandType::Ps => Command::Ps {
                position: Vec3::new(a[0], a[1], a[2]),
                yaw: a[3],
            },
            CommandType::Lv => Command::Lv {
                velocity: Vec3::new(a[0], a[1], a[2]),
                yaw: a[3],
            },
        }
    }

    pub fn validate(&self) -> Result<(), CommandError> {
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(CommandError::NonFinite);
        }
        if let Command::Ctbr(c) = self {
            if c.collective < 0.0 {
                return Err(CommandError::NegativeCollective(c.collective));
            }
        }
        Ok(())
    }
}
