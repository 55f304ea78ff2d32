//! Float helpers that work without `std`.

pub(crate) use libm::{atan, cos, exp, fabs as abs, log10, pow, sqrt};

#[inline]
pub(crate) fn db_to_power(db: f64) -> f64 {
    pow(10.0, db / 10.0)
}

#[inline]
pub(crate) fn power_to_db(p: f64) -> f64 {
    10.0 * log10(p)
}
