//! Passenger-flow analysis for a single transit station.
//!
//! The crate covers the numerical side of a period-based forecasting
//! workflow: bucketing and fusing counts ([`ingest`]), fault-tolerant
//! cleaning ([`quality`]), the statistical kernel ([`stats`]) and the
//! day-group / dummy-regression forecaster ([`forecast`]).
//!
//! It is `no_std` (with `alloc`) when the default `std` feature is off.
//! File formats and the command-line front end live in the `flowcast` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod forecast;
pub mod ingest;
pub mod quality;
pub mod stats;
pub mod types;

#[doc(inline)]
pub use self::{
    forecast::{DayGrouping, RegressionModel, ValidationReport},
    quality::{ExpectedGrid, QualityReport},
    stats::{AnovaTable, DummyDesign, FactorialSample, OlsFit},
    types::{
        CalendarLabel, DayType, Direction, PeriodCount, PeriodSchedule, Quality, SlotKey,
        TapRecord, TimeOfDay, Weekday,
    },
};
