//! Synthetic sensor streams derived from the ground truth.

use posflow::geometry::{
    AbsolutePosition, EulerOrder, GeometryError, Homography, Orientation, ReferenceSpace, Vector3,
};
use posflow::model::{DataFrame, DataObject, FramePayload};
use posflow::units;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ScenarioConfig, SourceKind};
use crate::nodes::SPHERO;
use crate::program::{generate_input_program, heading_yaw, start_position, Trajectory};

pub const GLOBAL_SPACE: &str = "global";
pub const VIDEO_SPACE: &str = "video";
pub const INTERNAL_SPACE: &str = "internal";

/// The area, in cm.
pub fn global_space() -> ReferenceSpace {
    ReferenceSpace::root(GLOBAL_SPACE, units::centimeter())
}

/// The rectified camera image. Pixel coordinates are read as cm and scaled
/// by 4; the image axes point against the area axes.
pub fn video_space(cfg: &ScenarioConfig) -> ReferenceSpace {
    let sx = cfg.camera_width_px as f64 / cfg.area_width_cm;
    let sy = cfg.camera_height_px as f64 / cfg.area_height_cm;
    ReferenceSpace::child_of(VIDEO_SPACE, &global_space())
        .with_euler_rotation(
            Vector3::new(180.0, 180.0, 0.0),
            EulerOrder::ZXY,
            &units::degree(),
        )
        .expect("degrees are angles")
        .with_translation(cfg.camera_width_px as f64, cfg.camera_height_px as f64, 0.0)
        .with_scale(sx, sy, 1.0)
}

/// The robot's own odometry frame: rotated by `internal_rotation_deg` with
/// its origin at the start position.
pub fn internal_space(cfg: &ScenarioConfig) -> ReferenceSpace {
    let q = Orientation::from_axis_angle(
        Vector3::new(0.0, 0.0, 1.0),
        cfg.internal_rotation_deg.to_radians(),
    );
    let (sx, sy) = start_position(cfg);
    let t = q.rotate(Vector3::new(sx, sy, 0.0));
    ReferenceSpace::child_of(INTERNAL_SPACE, &global_space())
        .with_rotation(q)
        .with_translation(-t.x, -t.y, 0.0)
}

/// Maps the raw camera image onto the rectified rectangle using the four
/// marker pixels (top left, top right, bottom right, bottom left).
pub fn camera_homography(cfg: &ScenarioConfig) -> Result<Homography, GeometryError> {
    let (w, h) = (cfg.camera_width_px as f64, cfg.camera_height_px as f64);
    Homography::from_points(cfg.markers, [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)])
}

/// One frame ready to be pushed into a source node at `at_us`.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub at_us: i64,
    pub source: SourceKind,
    pub frame: DataFrame,
}

/// All four streams, each ordered by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceStreams {
    pub video: Vec<Emission>,
    pub internal: Vec<Emission>,
    pub input: Vec<Emission>,
    pub imu: Vec<Emission>,
}

impl SourceStreams {
    /// Every emission ordered by time; simultaneous emissions keep the order
    /// video, internal, input, imu.
    pub fn merged(&self) -> Vec<Emission> {
        let mut all: Vec<(usize, &Emission)> =
            [&self.video, &self.internal, &self.input, &self.imu]
                .into_iter()
                .enumerate()
                .flat_map(|(i, s)| s.iter().map(move |e| (i, e)))
                .collect();
        all.sort_by_key(|(i, e)| (e.at_us, *i));
        all.into_iter().map(|(_, e)| e.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.video.len() + self.internal.len() + self.input.len() + self.imu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn rng(cfg: &ScenarioConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

/// Zero-mean Gaussian; a zero deviation yields exactly zero.
struct Noise(Option<Normal<f64>>);

impl Noise {
    fn new(sigma: f64) -> Self {
        Self((sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma")))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.0.as_ref().map_or(0.0, |n| n.sample(rng))
    }
}

fn ticks(start_us: i64, until_us: i64, hz: f64) -> impl Iterator<Item = i64> {
    (0..)
        .map(move |k: i64| start_us + (k as f64 * 1e6 / hz).round() as i64)
        .take_while(move |t| *t <= until_us)
}

/// Last instant any source emits.
pub fn run_end_us(cfg: &ScenarioConfig, truth: &Trajectory) -> i64 {
    truth.end_us() + cfg.tail_ms * 1000
}

pub fn simulate_sources(
    cfg: &ScenarioConfig,
    truth: &Trajectory,
) -> Result<SourceStreams, GeometryError> {
    let until = run_end_us(cfg, truth);
    let mut out = SourceStreams::default();
    if cfg.enabled(SourceKind::Video) {
        out.video = video_stream(cfg, truth, until)?;
    }
    if cfg.enabled(SourceKind::InternalPosition) {
        out.internal = internal_stream(cfg, truth, until)?;
    }
    if cfg.enabled(SourceKind::Input) {
        out.input = input_stream(cfg, until);
    }
    if cfg.enabled(SourceKind::Imu) {
        out.imu = imu_stream(cfg, truth, until);
    }
    Ok(out)
}

fn truth_position(truth: &Trajectory, t: i64) -> AbsolutePosition {
    let s = truth.state(t);
    AbsolutePosition::new_2d(s.x, s.y, units::centimeter()).with_timestamp(t)
}

fn video_stream(
    cfg: &ScenarioConfig,
    truth: &Trajectory,
    until: i64,
) -> Result<Vec<Emission>, GeometryError> {
    let space = video_space(cfg);
    let h_inv = camera_homography(cfg)?.inverse()?;
    let noise = Noise::new(cfg.video_noise_px);
    let mut rng = rng(cfg, 1);
    let mut out = Vec::new();
    for (k, t) in ticks(0, until, cfg.video_fps).enumerate() {
        let p = truth_position(truth, t);
        let (nx, ny) = (noise.sample(&mut rng), noise.sample(&mut rng));
        if cfg
            .blind_spots
            .iter()
            .any(|r| r.contains(p.vector.x, p.vector.y))
        {
            continue;
        }
        let warped = space.from_parent(&p)?.vector;
        let (rx, ry) = h_inv.apply(warped.x + nx, warped.y + ny)?;
        let frame = DataFrame::with_uid(format!("video-{k}"), t).with_payload(
            FramePayload::DetectionFrame {
                centroid: Vector3::new(rx, ry, 0.0),
                area: cfg.blob_area_px,
                width: cfg.raw_width_px,
                height: cfg.raw_height_px,
            },
        );
        out.push(emission(t, SourceKind::Video, frame));
    }
    Ok(out)
}

fn emission(at_us: i64, source: SourceKind, mut frame: DataFrame) -> Emission {
    if frame.source().is_none() {
        frame.set_source(DataObject::new(SPHERO).with_created(0));
    }
    Emission {
        at_us,
        source,
        frame,
    }
}

fn internal_stream(
    cfg: &ScenarioConfig,
    truth: &Trajectory,
    until: i64,
) -> Result<Vec<Emission>, GeometryError> {
    let space = internal_space(cfg);
    let mut rng = rng(cfg, 2);
    let dt = 1.0 / cfg.internal_hz;
    let step = Noise::new(cfg.internal_drift_cm_per_s * dt.sqrt());
    let cm = units::centimeter();
    let (mut dx, mut dy) = (0.0, 0.0);
    let mut out = Vec::new();
    for (k, t) in ticks(0, until, cfg.internal_hz).enumerate() {
        if k > 0 {
            dx += step.sample(&mut rng);
            dy += step.sample(&mut rng);
        }
        let mut p = truth_position(truth, t);
        p.vector.x += dx;
        p.vector.y += dy;
        let mut local = space.from_parent(&p)?;
        local.accuracy = Some(cfg.internal_accuracy_cm);
        local.accuracy_unit = cm.clone();
        let object = DataObject::new(SPHERO).with_created(0).with_position(local);
        let mut frame = DataFrame::with_uid(format!("internal-{k}"), t);
        frame.set_source(object);
        out.push(emission(t, SourceKind::InternalPosition, frame));
    }
    Ok(out)
}

/// The commanded program integrated at the commanded speed. Each frame holds
/// the position reached at the previous emission together with the velocity
/// in force since then; dead reckoning brings it up to the frame's time.
fn input_stream(cfg: &ScenarioConfig, until: i64) -> Vec<Emission> {
    let program = generate_input_program(cfg);
    let commanded = Trajectory::roll(&program, start_position(cfg), cfg.commanded_speed_mps(), 0);
    let mut times: Vec<i64> = ticks(0, until, cfg.input_hz).collect();
    times.extend(commanded.segments.iter().map(|s| s.start_us));
    times.push(commanded.end_us());
    times.retain(|t| *t <= until);
    times.sort_unstable();
    times.dedup();

    let cm = units::centimeter();
    let mut out = Vec::new();
    let mut prev: Option<i64> = None;
    for (k, t) in times.into_iter().enumerate() {
        let from = prev.unwrap_or(t);
        prev = Some(t);
        let s = commanded.state(from);
        let speed_mps = s.speed / 100.0;
        let yaw =
            Orientation::from_axis_angle(Vector3::new(0.0, 0.0, 1.0), heading_yaw(s.heading_deg));
        let mut p = AbsolutePosition::new_2d(s.x, s.y, cm.clone())
            .with_timestamp(from)
            .with_accuracy(cfg.input_accuracy_cm, cm.clone())
            .with_orientation(yaw);
        p.velocity.linear = Vector3::new(speed_mps, 0.0, 0.0);
        let mut frame =
            DataFrame::with_uid(format!("input-{k}"), t).with_payload(FramePayload::InputFrame {
                heading: s.heading_deg,
                speed: if s.speed > 0.0 {
                    cfg.speed_setting
                } else {
                    0.0
                },
            });
        frame.set_source(DataObject::new(SPHERO).with_created(0).with_position(p));
        out.push(emission(t, SourceKind::Input, frame));
    }
    out
}

/// Body-frame speed and heading with Gaussian noise. The frames carry no
/// position; the model supplies the robot's stored one.
fn imu_stream(cfg: &ScenarioConfig, truth: &Trajectory, until: i64) -> Vec<Emission> {
    let mut rng = rng(cfg, 4);
    let speed_noise = Noise::new(cfg.imu_speed_noise_mps);
    let yaw_noise = Noise::new(cfg.imu_yaw_noise_deg.to_radians());
    let mut out = Vec::new();
    for (k, t) in ticks(0, until, cfg.imu_hz).enumerate() {
        let s = truth.state(t);
        let v = s.speed / 100.0 + speed_noise.sample(&mut rng);
        let yaw = heading_yaw(s.heading_deg) + yaw_noise.sample(&mut rng);
        let frame =
            DataFrame::with_uid(format!("imu-{k}"), t).with_payload(FramePayload::ImuDataFrame {
                acceleration: Vector3::default(),
                angular_velocity: Vector3::default(),
                linear_velocity: Some(Vector3::new(v, 0.0, 0.0)),
                orientation: Some(Orientation::from_axis_angle(
                    Vector3::new(0.0, 0.0, 1.0),
                    yaw,
                )),
                frequency: cfg.imu_hz,
            });
        out.push(emission(t, SourceKind::Imu, frame));
    }
    out
}
