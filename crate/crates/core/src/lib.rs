//! Core library for a stereo-vision navigation aid.
//!
//! The pipeline runs in three stages. First, checkerboard images calibrate a
//! stereo rig: per-camera intrinsics from planar homographies, then a damped
//! least-squares refinement over all views, then the relative pose between the
//! two cameras ([`calib`]). Second, rectified image pairs are block-matched
//! into disparity maps and converted to metric depth, which is averaged over
//! detection boxes to range each object ([`stereo`], [`detect`]). Third, a
//! walking route over a small geographic graph is turned into spoken guidance
//! that interleaves turn instructions with object warnings, and object reports
//! are shipped to a handheld receiver over a framed byte protocol ([`route`],
//! [`guide`], [`wire`]).
//!
//! File formats (PGM images, disparity containers, corner and annotation CSV)
//! live in [`media`].

pub mod calib;
pub mod detect;
pub mod guide;
pub mod media;
pub mod route;
pub mod stereo;
pub mod wire;
