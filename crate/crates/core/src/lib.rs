pub mod arith;
pub mod bessel;
pub mod density;
pub mod error;
pub mod expansion;
pub mod hp;
pub mod modforms;
pub mod petersson;
pub mod quad;
pub mod report;
pub mod special;
pub mod testfn;

pub use error::{Error, Result};
