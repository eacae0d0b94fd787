pub mod ddsa;
pub mod dot;
pub mod error;
pub mod examples;
pub mod formula;
pub mod ltlf;
pub mod oracle;
pub mod product;
pub mod solve;
pub mod summary;
pub mod syntax;

pub use error::{Error, Result};
