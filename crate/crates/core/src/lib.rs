pub mod error;
pub mod exterior;
pub mod linalg;
pub mod scalar;
pub mod spectral;
pub mod unipotent;
pub mod cohomology;
pub mod sullivan;
pub mod formality;
pub mod symplectic;
pub mod report;
