//! Unit conversions. Everything internal is SI; the CLI and configs speak
//! fs/ns/ps/cm/eV.

pub const FS: f64 = 1e-15;
pub const PS: f64 = 1e-12;
pub const NS: f64 = 1e-9;
pub const CM: f64 = 1e-2;
pub const MHZ: f64 = 1e6;

#[inline]
pub fn fs_to_s(x: f64) -> f64 {
    x * FS
}

#[inline]
pub fn ps_to_s(x: f64) -> f64 {
    x * PS
}

#[inline]
pub fn ns_to_s(x: f64) -> f64 {
    x * NS
}

#[inline]
pub fn s_to_ns(x: f64) -> f64 {
    x / NS
}

#[inline]
pub fn cm_to_m(x: f64) -> f64 {
    x * CM
}

/// Joule to electron-volt.
#[inline]
pub fn j_to_ev(x: f64) -> f64 {
    x / crate::constants::EV
}
