//! Diagnostics CSV schema: one row per emitted slice, 17 significant digits
//! per value (round-trip safe), fully deterministic bytes.

use crate::diagnostics::DiagnosticsRecord;

pub const HEADER: &str = "t,mass,mx,my,mz,E,H,D,kappa,fisher,a_lb_margin,clipped_mass";

/// 17 significant digits: enough to reproduce the f64 bit pattern exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(r: &DiagnosticsRecord) -> String {
    [
        r.t,
        r.mass,
        r.first_moment[0],
        r.first_moment[1],
        r.first_moment[2],
        r.e,
        r.h,
        r.production,
        r.kappa,
        r.fisher,
        r.a_min_margin,
        r.clipped_mass,
    ]
    .map(fmt_f64)
    .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-17, 0.0] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn header_has_twelve_columns() {
        assert_eq!(HEADER.split(',').count(), 12);
    }
}
