mod common;

use common::green_orders;
use qfrac::{Quat, SpectralParam};

#[test]
fn green_gap_is_second_order() {
    for s in [SpectralParam::imaginary(Quat::e1(), 1.5).unwrap(), SpectralParam::new(Quat::new(0.7, 0.0, 1.0, -0.5))] {
        let (gaps, orders) = green_orders(s);
        for o in orders {
            assert!(o >= 1.8, "observed order {o}, gaps {gaps:?}");
        }
    }
}
