use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scene has no shapes")]
    EmptyScene,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("point is not in the domain of the nearest point projection ({count} nearest points)")]
    NotInDomain { count: usize },
    #[error("point is not on the set (distance {distance:e})")]
    NotOnSet { distance: f64 },
    #[error("point is not a regular point: {0}")]
    NotRegular(String),
    #[error("finite-difference stencil left the domain of the projection")]
    StencilOutsideDomain,
    #[error("(a, u) is not in the normal bundle at radius {r_eval} (reach {reach})")]
    NotInBundle { r_eval: f64, reach: f64 },
    #[error("invalid index {index} (allowed 0..={max})")]
    InvalidIndex { index: usize, max: usize },
    #[error("point is not on the manifold (distance {distance:e})")]
    NotOnManifold { distance: f64 },
    #[error("level set at r = {r} is empty on the grid")]
    EmptyLevelSet { r: f64 },
    #[error("radius {radius} is not below the reach {reach} of the scene")]
    ReachTooSmall { radius: f64, reach: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
