//! Tools for building a surname dictionary from frequency lists, parish
//! register extracts and calendared Tudor grants.

pub mod cli;
pub mod dictionary;
pub mod evidence;
pub mod fiants;
pub mod freqlist;
pub mod gazetteer;
pub mod igi;
pub mod manifest;
pub mod names;
pub mod regnal;
pub mod xml;
