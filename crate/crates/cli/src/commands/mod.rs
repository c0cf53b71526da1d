pub mod analyze;
pub mod gain;
pub mod simulate;
pub mod verify;
