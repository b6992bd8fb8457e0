use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown commodity `{0}`")]
    UnknownCommodity(String),

    #[error("edge {from} -> {to}: negative cost {cost} for commodity {commodity}")]
    NegativeCost {
        from: String,
        to: String,
        commodity: String,
        cost: f64,
    },

    #[error(
        "edge {from} -> {to} is not axis-aligned; grid costs need horizontal or vertical edges"
    )]
    NotAxisAligned { from: String, to: String },

    #[error("self-loop edge at node {0}")]
    SelfLoop(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no route for commodity {commodity} from {from} to {to}")]
    Unreachable {
        commodity: String,
        from: String,
        to: String,
    },

    #[error("missing recipe for product {0}")]
    MissingRecipe(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that describe an infeasible instance rather than
    /// malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::Unreachable { .. })
    }
}
