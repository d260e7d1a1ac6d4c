// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod excursion;
pub mod grid;
pub mod localtime;
pub mod seed;
pub mod signflip;
pub mod stats;
pub mod report;
pub mod signed_measure;
pub mod skewbm;
pub mod config;
pub mod runner;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/paths.md")]
    pub mod paths {}
    #[doc = include_str!("../../../book/src/excursions.md")]
    pub mod excursions {}
    #[doc = include_str!("../../../book/src/local_time.md")]
    pub mod local_time {}
    #[doc = include_str!("../../../book/src/signed_measures.md")]
    pub mod signed_measures {}
    #[doc = include_str!("../../../book/src/skew.md")]
    pub mod skew {}
    #[doc = include_str!("../../../book/src/running.md")]
    pub mod running {}
}
