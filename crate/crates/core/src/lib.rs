//! Drone delivery composition over a skyway network of recharging stations.
//!
//! The crate covers the whole pipeline: the network and plan model, wind-aware
//! leg timing and battery use, skyline drone selection, offline composition
//! (lookahead, greedy, brute force), resilient execution under perturbations,
//! and a seeded experiment harness.

pub mod calendar;
pub mod error;
pub mod harness;
pub mod model;
pub mod planner;
pub mod resilience;
pub mod skyline;
pub mod wind;

pub use calendar::{next_pad_available, reserve_pad, PadCalendar};
pub use error::{Error, Result};
pub use model::{
    commit_plan, release_plan, validate_plan, CompositionPlan, DeliveryRequest, DroneSpec, Node,
    NodeId, Origin, PlanLeg, SkywayNetwork, SkywaySegment,
};
pub use planner::{
    compose, compose_bruteforce, compose_greedy, compose_lookahead, expand, score_state, Action,
    Algorithm, Composed, LookaheadDepth, PlannerConfig, PlanningContext, RouteQuery, State,
};
pub use skyline::{bnl_skyline, payload_filter, select_drone, QualityDirection, SkylineResult};
pub use wind::{battery_consumed, ground_speed, travel_time, EnergyModel, WindField, WindSample};
