// SPDX-License-Identifier: Apache-2.0

pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod soliton;

pub use error::{Error, Result};
