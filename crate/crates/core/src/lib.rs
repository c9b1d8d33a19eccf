//! Heteroclinic T-points of the Lorenz system and the knots they produce.

pub mod braids;
pub mod classify;
pub mod dynamics;
pub mod heteroclinic;
pub mod knots;
pub mod plmodel;
pub mod suite;
pub mod templates;
