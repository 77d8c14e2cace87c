use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("reservation conflict at t={start}..{end}: no free pad")]
    ReservationConflict { start: f64, end: f64 },

    #[error(
        "infeasible wind: crosswind {crosswind:.3} km/h against air speed {air_speed:.3} km/h"
    )]
    InfeasibleWind { crosswind: f64, air_speed: f64 },

    #[error("no candidate drone can carry {0} kg")]
    EmptyCandidateSet(f64),

    #[error("dead end at node {0}: no feasible action")]
    DeadEnd(NodeId),

    #[error("destination {destination} unreachable from {origin}")]
    UnreachableDestination { origin: NodeId, destination: NodeId },

    #[error("no local recomposition reaches any downstream node from {0}")]
    UnreachableLocalDestination(NodeId),

    #[error("livelock guard: node {node} visited more than {limit} times")]
    LivelockGuard { node: NodeId, limit: usize },

    #[error("instance too large: {nodes} nodes exceeds brute-force limit of {limit}")]
    InstanceTooLarge { nodes: usize, limit: usize },

    #[error("splice mismatch: {0}")]
    SpliceMismatch(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("no segment between {0} and {1}")]
    UnknownSegment(NodeId, NodeId),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigInvalid(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
