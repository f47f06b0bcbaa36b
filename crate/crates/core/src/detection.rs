use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lidar,
    Stereo,
}

/// A crater found in sensor data, reported in the site frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraterDetection {
    pub center_xy: [f64; 2],
    pub diameter: f64,
    pub score: f64,
    pub landmark_id: Option<u64>,
    pub method: Method,
}
