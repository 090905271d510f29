//! Scenario settings and their `key=value` file format.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("unknown source `{0}` (expected video, sphero_position, input or sphero_velocity)")]
    UnknownSource(String),
    #[error("{0}")]
    Invalid(String),
}

/// The four inputs of the demonstrator model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    Video,
    /// The robot's internally computed position.
    InternalPosition,
    Input,
    /// Velocity and orientation readings used for dead reckoning.
    Imu,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::Video,
        SourceKind::InternalPosition,
        SourceKind::Input,
        SourceKind::Imu,
    ];

    /// Name of the node feeding the merge.
    pub fn node_name(self) -> &'static str {
        match self {
            SourceKind::Video => "video",
            SourceKind::InternalPosition => "sphero_position",
            SourceKind::Input => "input",
            SourceKind::Imu => "sphero_velocity",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.node_name())
    }
}

impl FromStr for SourceKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "video" => Ok(SourceKind::Video),
            "sphero_position" | "internal" | "internal_position" => {
                Ok(SourceKind::InternalPosition)
            }
            "input" => Ok(SourceKind::Input),
            "sphero_velocity" | "imu" | "dead_reckoning" => Ok(SourceKind::Imu),
            other => Err(ConfigError::UnknownSource(other.to_string())),
        }
    }
}

/// Axis-aligned rectangle in area coordinates (cm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x && x <= self.x + self.width && y >= self.y && y <= self.y + self.height
    }
}

impl FromStr for Rect {
    type Err = ConfigError;

    /// `x,y,w,h`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadValue {
            key: "blind_spot".into(),
            value: s.to_string(),
        };
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match parts[..] {
            [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub area_width_cm: f64,
    pub area_height_cm: f64,
    /// Size of the rectified camera image.
    pub camera_width_px: u32,
    pub camera_height_px: u32,
    /// Pixel positions of the area corners in the raw camera image, in the
    /// order top-left, top-right, bottom-right, bottom-left of the rectified
    /// image.
    pub markers: [(f64, f64); 4],
    pub raw_width_px: u32,
    pub raw_height_px: u32,
    pub video_fps: f64,
    pub merge_timeout_ms: i64,
    pub min_count: usize,
    pub debounce_ms: i64,
    /// Command speed on the 0–255 scale.
    pub speed_setting: f64,
    /// Speed the command scale maps 255 to.
    pub max_speed_mps: f64,
    /// Speed the robot really rolls at when given `speed_setting`.
    pub speed_mps: f64,
    pub leg_x_ms: i64,
    pub leg_y_ms: i64,
    pub dec_x_ms: i64,
    pub dec_y_ms: i64,
    pub blind_spots: Vec<Rect>,
    pub disabled: BTreeSet<SourceKind>,
    pub video_noise_px: f64,
    pub blob_area_px: f64,
    pub imu_hz: f64,
    pub imu_speed_noise_mps: f64,
    pub imu_yaw_noise_deg: f64,
    pub imu_accuracy_cm: f64,
    pub input_hz: f64,
    pub input_accuracy_cm: f64,
    pub internal_hz: f64,
    pub internal_drift_cm_per_s: f64,
    pub internal_accuracy_cm: f64,
    /// Rotation of the robot's own frame against the area, about z.
    pub internal_rotation_deg: f64,
    /// How long the simulation keeps running after the last command.
    pub tail_ms: i64,
    pub key_point_interval_ms: i64,
    pub key_point_count: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            area_width_cm: 260.0,
            area_height_cm: 200.0,
            camera_width_px: 1040,
            camera_height_px: 800,
            markers: [
                (307.0, 120.0),
                (1473.0, 87.0),
                (1899.0, 891.0),
                (20.0, 1024.0),
            ],
            raw_width_px: 1920,
            raw_height_px: 1080,
            video_fps: 30.0,
            merge_timeout_ms: 20,
            min_count: 2,
            debounce_ms: 10,
            speed_setting: 150.0,
            max_speed_mps: 1.0,
            speed_mps: 0.58,
            leg_x_ms: 4200,
            leg_y_ms: 3200,
            dec_x_ms: 168,
            dec_y_ms: 128,
            blind_spots: Vec::new(),
            disabled: BTreeSet::new(),
            video_noise_px: 2.0,
            blob_area_px: 100.0,
            imu_hz: 50.0,
            imu_speed_noise_mps: 0.02,
            imu_yaw_noise_deg: 1.0,
            imu_accuracy_cm: 10.0,
            input_hz: 25.0,
            input_accuracy_cm: 15.0,
            internal_hz: 20.0,
            internal_drift_cm_per_s: 0.5,
            internal_accuracy_cm: 10.0,
            internal_rotation_deg: 0.0,
            tail_ms: 500,
            key_point_interval_ms: 51,
            key_point_count: 100,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_point(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    let (x, y) = value.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

impl ScenarioConfig {
    /// Every noise level set to zero.
    pub fn noiseless(mut self) -> Self {
        self.video_noise_px = 0.0;
        self.imu_speed_noise_mps = 0.0;
        self.imu_yaw_noise_deg = 0.0;
        self.internal_drift_cm_per_s = 0.0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_blind_spot(mut self, r: Rect) -> Self {
        self.blind_spots.push(r);
        self
    }

    pub fn without(mut self, source: SourceKind) -> Self {
        self.disabled.insert(source);
        self
    }

    pub fn enabled(&self, source: SourceKind) -> bool {
        !self.disabled.contains(&source)
    }

    /// The left third of the area.
    pub fn left_third(&self) -> Rect {
        Rect::new(0.0, 0.0, self.area_width_cm / 3.0, self.area_height_cm)
    }

    /// Speed the command scale promises, which the input source integrates.
    pub fn commanded_speed_mps(&self) -> f64 {
        self.speed_setting / 255.0 * self.max_speed_mps
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse(key, v)?,
            "area_width_cm" => self.area_width_cm = parse(key, v)?,
            "area_height_cm" => self.area_height_cm = parse(key, v)?,
            "camera_width_px" => self.camera_width_px = parse(key, v)?,
            "camera_height_px" => self.camera_height_px = parse(key, v)?,
            "raw_width_px" => self.raw_width_px = parse(key, v)?,
            "raw_height_px" => self.raw_height_px = parse(key, v)?,
            "marker_top_left" => self.markers[0] = parse_point(key, v)?,
            "marker_top_right" => self.markers[1] = parse_point(key, v)?,
            "marker_bottom_right" => self.markers[2] = parse_point(key, v)?,
            "marker_bottom_left" => self.markers[3] = parse_point(key, v)?,
            "video_fps" => self.video_fps = parse(key, v)?,
            "merge_timeout_ms" => self.merge_timeout_ms = parse(key, v)?,
            "min_count" => self.min_count = parse(key, v)?,
            "debounce_ms" => self.debounce_ms = parse(key, v)?,
            "speed_setting" => self.speed_setting = parse(key, v)?,
            "max_speed_mps" => self.max_speed_mps = parse(key, v)?,
            "speed_mps" => self.speed_mps = parse(key, v)?,
            "leg_x_ms" => self.leg_x_ms = parse(key, v)?,
            "leg_y_ms" => self.leg_y_ms = parse(key, v)?,
            "dec_x_ms" => self.dec_x_ms = parse(key, v)?,
            "dec_y_ms" => self.dec_y_ms = parse(key, v)?,
            "blind_spot" => self.blind_spots.push(v.parse()?),
            "disable_source" => {
                self.disabled.insert(v.parse()?);
            }
            "video_noise_px" => self.video_noise_px = parse(key, v)?,
            "blob_area_px" => self.blob_area_px = parse(key, v)?,
            "imu_hz" => self.imu_hz = parse(key, v)?,
            "imu_speed_noise_mps" => self.imu_speed_noise_mps = parse(key, v)?,
            "imu_yaw_noise_deg" => self.imu_yaw_noise_deg = parse(key, v)?,
            "imu_accuracy_cm" => self.imu_accuracy_cm = parse(key, v)?,
            "input_hz" => self.input_hz = parse(key, v)?,
            "input_accuracy_cm" => self.input_accuracy_cm = parse(key, v)?,
            "internal_hz" => self.internal_hz = parse(key, v)?,
            "internal_drift_cm_per_s" => self.internal_drift_cm_per_s = parse(key, v)?,
            "internal_accuracy_cm" => self.internal_accuracy_cm = parse(key, v)?,
            "internal_rotation_deg" => self.internal_rotation_deg = parse(key, v)?,
            "tail_ms" => self.tail_ms = parse(key, v)?,
            "key_point_interval_ms" => self.key_point_interval_ms = parse(key, v)?,
            "key_point_count" => self.key_point_count = parse(key, v)?,
            other => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Reads `key=value` lines on top of the defaults. `#` starts a comment;
    /// blank lines are ignored. `blind_spot` and `disable_source` may repeat.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(k, v).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("area_width_cm", self.area_width_cm),
            ("area_height_cm", self.area_height_cm),
            ("video_fps", self.video_fps),
            ("speed_mps", self.speed_mps),
            ("max_speed_mps", self.max_speed_mps),
            ("imu_hz", self.imu_hz),
            ("input_hz", self.input_hz),
            ("internal_hz", self.internal_hz),
            ("blob_area_px", self.blob_area_px),
            ("imu_accuracy_cm", self.imu_accuracy_cm),
            ("input_accuracy_cm", self.input_accuracy_cm),
            ("internal_accuracy_cm", self.internal_accuracy_cm),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("`{k}` must be positive")));
            }
        }
        let durations = [
            ("merge_timeout_ms", self.merge_timeout_ms),
            ("debounce_ms", self.debounce_ms),
            ("leg_x_ms", self.leg_x_ms),
            ("leg_y_ms", self.leg_y_ms),
            ("key_point_interval_ms", self.key_point_interval_ms),
        ];
        for (k, v) in durations {
            if v <= 0 {
                return Err(ConfigError::Invalid(format!("`{k}` must be positive")));
            }
        }
        if self.dec_x_ms < 0 || self.dec_y_ms < 0 || self.tail_ms < 0 {
            return Err(ConfigError::Invalid(
                "decrements and tail must not be negative".into(),
            ));
        }
        if self.dec_x_ms == 0 && self.dec_y_ms == 0 {
            return Err(ConfigError::Invalid(
                "the spiral never ends without a decrement".into(),
            ));
        }
        if self.camera_width_px == 0 || self.camera_height_px == 0 {
            return Err(ConfigError::Invalid(
                "camera image must not be empty".into(),
            ));
        }
        if !(0.0..=255.0).contains(&self.speed_setting) {
            return Err(ConfigError::Invalid(
                "`speed_setting` must lie in 0..=255".into(),
            ));
        }
        let noise = [
            self.video_noise_px,
            self.imu_speed_noise_mps,
            self.imu_yaw_noise_deg,
            self.internal_drift_cm_per_s,
        ];
        if noise.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(ConfigError::Invalid(
                "noise levels must not be negative".into(),
            ));
        }
        for r in &self.blind_spots {
            let inside = r.width > 0.0
                && r.height > 0.0
                && r.x >= 0.0
                && r.y >= 0.0
                && r.x + r.width <= self.area_width_cm + 1e-9
                && r.y + r.height <= self.area_height_cm + 1e-9;
            if !inside {
                return Err(ConfigError::Invalid(format!(
                    "blind spot {r} lies outside the area"
                )));
            }
        }
        if self.min_count == 0 || self.key_point_count == 0 {
            return Err(ConfigError::Invalid("counts must be positive".into()));
        }
        Ok(())
    }
}
