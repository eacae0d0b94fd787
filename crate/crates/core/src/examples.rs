//! The small example systems shipped in `models/`.

use crate::ddsa::Ddsa;
use crate::syntax::parse_model;

pub const B1: &str = include_str!("../../../models/b1.dds");
pub const B1_INT: &str = include_str!("../../../models/b1_int.dds");
pub const B2: &str = include_str!("../../../models/b2.dds");
pub const B3: &str = include_str!("../../../models/b3.dds");
pub const B4: &str = include_str!("../../../models/b4.dds");
pub const AUCTION: &str = include_str!("../../../models/auction.dds");
pub const AUCTION_PROPS: &str = include_str!("../../../models/auction.props");

fn load(src: &str) -> Ddsa {
    parse_model(src).expect("bundled model parses")
}

pub fn b1() -> Ddsa {
    load(B1)
}
pub fn b1_int() -> Ddsa {
    load(B1_INT)
}
pub fn b2() -> Ddsa {
    load(B2)
}
pub fn b3() -> Ddsa {
    load(B3)
}
pub fn b4() -> Ddsa {
    load(B4)
}
pub fn auction() -> Ddsa {
    load(AUCTION)
}

/// The five auction properties, one per line.
pub fn auction_properties() -> Vec<&'static str> {
    AUCTION_PROPS.lines().filter(|l| !l.trim().is_empty()).collect()
}
