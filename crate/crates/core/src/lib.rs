//! Core of the leakage detection and patching pipeline: trace format and
//! mutual-information analysis, address-to-source mapping, the unified
//! leakage model with detector adapters, prompt rendering, conversation
//! context, cost accounting and C source splicing.
//!
//! `no_std` with `alloc`; IO, processes and HTTP live in the `zeroleak`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adapters;
pub mod classify;
pub mod context;
pub mod csrc;
pub mod fingerprint;
pub mod leakage;
pub mod ledger;
pub mod mi;
pub mod prompt;
pub mod srcmap;
pub mod trace;
