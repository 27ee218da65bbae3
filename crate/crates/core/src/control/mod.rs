//! Command interfaces and the cascaded controller that turns each of them
//! into desired rotor speeds: position -> velocity -> geometric attitude ->
//! body rates -> thrust allocation.

mod cascade;
mod command;
mod mixer;

pub use cascade::{
    acceleration_to_ctbr, command_to_rotor_speeds, ctbr_to_rotor_speeds, lv_to_ctbr, ps_to_ctbr,
    thrusts_to_rotor_speeds, ControllerGains, CtbrOutput, PdGains, RotorCommand,
};
pub use command::{Command, CommandError, CommandType, Ctbr};
pub use mixer::{allocation_matrix, mixer, MixerOutput};
