//! Drivers for the three model problems: basis pursuit, Potts
//! segmentation and the relaxed assignment problem.

pub mod assign;
pub mod bp;
pub mod potts;
