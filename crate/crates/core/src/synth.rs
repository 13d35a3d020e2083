//! Synthetic clips of a periodically moving stick figure.
//!
//! Every acceptance-style check in the workspace rests on this generator: it
//! produces videos with exactly known pose, person box, and motion period.
//! The figure articulates eight limb segments with per-limb sinusoidal
//! angles, so frames one period apart are bit-identical when noise and
//! background motion are off, and ground-truth pose distance separates
//! same-phase from anti-phase frames.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatMath;

use crate::data::{
    BenchmarkExemplar, DataError, Frame, FrameId, Joint, PoseAnnotation, VideoClip, EXEMPLAR_SET_SIZE,
    JOINT_COUNT,
};
use crate::geom::BoundingBox;
use crate::image::GrayImage;
use crate::seed::{make_rng, sample_without_replacement};
use rand_distr::{Distribution, Normal};

/// Parameters of one synthetic clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_frames: u32,
    /// Square frame edge length in pixels.
    pub image_size: u32,
    /// Motion period in frames.
    pub period: u32,
    /// Peak limb excursion in pixels (0 freezes the figure).
    pub amplitude: f32,
    /// Horizontal background drift in pixels per frame.
    pub background_motion: f32,
    /// Standard deviation of i.i.d. Gaussian pixel noise, in gray levels.
    pub noise_sigma: f32,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_frames: 200,
            image_size: 64,
            period: 20,
            amplitude: 8.0,
            background_motion: 0.5,
            noise_sigma: 10.0,
            seed: 0,
        }
    }
}

/// Exact per-frame ground truth for one generated clip.
#[derive(Debug, Clone)]
pub struct SynthGroundTruth {
    pub video_id: String,
    pub poses: Vec<PoseAnnotation>,
    pub boxes: Vec<BoundingBox>,
    pub period: u32,
    /// `phase[t] = (t mod period) / period`.
    pub phases: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("frame {frame_index}: figure leaves the {image_size}x{image_size} image (joint at {x:.1},{y:.1}); reduce amplitude or enlarge image_size")]
    FigureOutOfBounds {
        frame_index: u32,
        image_size: u32,
        x: f32,
        y: f32,
    },
    #[error("exemplar {exemplar}: only {found} {kind} candidates for query frame {query}, need {needed}")]
    TooFewCandidates {
        exemplar: usize,
        query: u32,
        kind: &'static str,
        found: usize,
        needed: usize,
    },
    #[error("cannot draw {requested} distinct query frames from {available}")]
    TooFewQueries { requested: usize, available: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.period < 4 {
            return Err(SynthError::InvalidParam {
                name: "period",
                value: self.period as f64,
                requirement: "must be at least 4 frames",
            });
        }
        if self.n_frames < 2 * self.period {
            return Err(SynthError::InvalidParam {
                name: "n_frames",
                value: self.n_frames as f64,
                requirement: "must cover at least two periods",
            });
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(SynthError::InvalidParam {
                name: "amplitude",
                value: self.amplitude as f64,
                requirement: "must be finite and non-negative",
            });
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(SynthError::InvalidParam {
                name: "noise_sigma",
                value: self.noise_sigma as f64,
                requirement: "must be finite and non-negative",
            });
        }
        if !self.background_motion.is_finite() {
            return Err(SynthError::InvalidParam {
                name: "background_motion",
                value: self.background_motion as f64,
                requirement: "must be finite",
            });
        }
        if self.image_size < 16 {
            return Err(SynthError::InvalidParam {
                name: "image_size",
                value: self.image_size as f64,
                requirement: "must be at least 16 pixels",
            });
        }
        Ok(())
    }
}

// Skeleton proportions in units of image_size / 16. The torso is rigid;
// arms and legs articulate.
const UNIT_PER_SIZE: f32 = 1.0 / 16.0;
const HEAD_RADIUS_U: f32 = 1.2;
const NECK_Y_U: f32 = -3.0;
const HEAD_Y_U: f32 = -4.75;
const SHOULDER_HALF_U: f32 = 1.5;
const SHOULDER_DROP_U: f32 = 0.25;
const HIP_Y_U: f32 = 2.0;
const HIP_HALF_U: f32 = 1.0;
const UPPER_ARM_U: f32 = 2.0;
const FOREARM_U: f32 = 2.0;
const THIGH_U: f32 = 2.5;
const SHIN_U: f32 = 2.5;

/// Half-width of the anti-aliased limb stroke in pixels.
const STROKE_RADIUS: f32 = 1.5;
/// Gray level of the figure.
const INK: f32 = 20.0;
/// Coverage below this leaves a pixel untouched for box-tracking purposes.
const COVERAGE_EPS: f32 = 1e-3;

/// Angle sources for one articulated limb chain: `base + amp * sin(2*pi*phase + lag)`,
/// measured from straight down, positive toward +x.
struct LimbSpec {
    base: f32,
    lag: f32,
    /// Fraction of the chain's angular amplitude this segment uses.
    gain: f32,
}

// Arms swing in anti-phase (left forward when right is back), legs oppose
// their same-side arm, distal segments lag and swing slightly less.
const L_UPPER_ARM: LimbSpec = LimbSpec { base: -0.35, lag: 0.0, gain: 1.0 };
const L_FOREARM: LimbSpec = LimbSpec { base: -0.40, lag: 1.05, gain: 0.8 };
const R_UPPER_ARM: LimbSpec = LimbSpec { base: 0.35, lag: core::f32::consts::PI, gain: 1.0 };
const R_FOREARM: LimbSpec = LimbSpec { base: 0.40, lag: core::f32::consts::PI + 1.05, gain: 0.8 };
const L_THIGH: LimbSpec = LimbSpec { base: -0.12, lag: core::f32::consts::PI, gain: 1.0 };
const L_SHIN: LimbSpec = LimbSpec { base: -0.05, lag: core::f32::consts::PI + 0.8, gain: 0.8 };
const R_THIGH: LimbSpec = LimbSpec { base: 0.12, lag: 0.0, gain: 1.0 };
const R_SHIN: LimbSpec = LimbSpec { base: 0.05, lag: 0.8, gain: 0.8 };

impl LimbSpec {
    fn angle(&self, phase: f32, amp_rad: f32) -> f32 {
        self.base + self.gain * amp_rad * (core::f32::consts::TAU * phase + self.lag).sin()
    }
}

/// Vertical torso bob per unit amplitude; ties body translation to the same
/// amplitude knob as the limb swing, so large amplitudes genuinely push the
/// figure toward the image border.
const BOB_GAIN: f32 = 0.15;

fn joint_positions(params: &SynthParams, phase: f32) -> [(f32, f32); JOINT_COUNT] {
    let s = params.image_size as f32;
    let u = s * UNIT_PER_SIZE;
    let cx = 0.5 * s;
    let cy = 0.5 * s + BOB_GAIN * params.amplitude * (core::f32::consts::TAU * phase).sin();

    // Angular amplitudes scale the requested pixel amplitude by the chain
    // reach, so end effectors swing by roughly `amplitude` pixels.
    let arm_amp = params.amplitude / ((UPPER_ARM_U + FOREARM_U) * u);
    let leg_amp = params.amplitude / ((THIGH_U + SHIN_U) * u);

    let head = (cx, cy + HEAD_Y_U * u);
    let neck = (cx, cy + NECK_Y_U * u);
    let l_sho = (cx - SHOULDER_HALF_U * u, cy + (NECK_Y_U + SHOULDER_DROP_U) * u);
    let r_sho = (cx + SHOULDER_HALF_U * u, cy + (NECK_Y_U + SHOULDER_DROP_U) * u);
    let l_hip = (cx - HIP_HALF_U * u, cy + HIP_Y_U * u);
    let r_hip = (cx + HIP_HALF_U * u, cy + HIP_Y_U * u);

    // Chains: each segment hangs from its parent at `angle` from vertical.
    let extend = |from: (f32, f32), angle: f32, len: f32| -> (f32, f32) {
        (from.0 + len * angle.sin(), from.1 + len * angle.cos())
    };

    let la = L_UPPER_ARM.angle(phase, arm_amp);
    let l_elb = extend(l_sho, la, UPPER_ARM_U * u);
    let l_wri = extend(l_elb, la + L_FOREARM.angle(phase, arm_amp), FOREARM_U * u);
    let ra = R_UPPER_ARM.angle(phase, arm_amp);
    let r_elb = extend(r_sho, ra, UPPER_ARM_U * u);
    let r_wri = extend(r_elb, ra + R_FOREARM.angle(phase, arm_amp), FOREARM_U * u);

    let lt = L_THIGH.angle(phase, leg_amp);
    let l_knee = extend(l_hip, lt, THIGH_U * u);
    let l_ank = extend(l_knee, lt + L_SHIN.angle(phase, leg_amp), SHIN_U * u);
    let rt = R_THIGH.angle(phase, leg_amp);
    let r_knee = extend(r_hip, rt, THIGH_U * u);
    let r_ank = extend(r_knee, rt + R_SHIN.angle(phase, leg_amp), SHIN_U * u);

    [
        head, neck, l_sho, r_sho, l_elb, r_elb, l_wri, r_wri, l_hip, r_hip, l_knee, r_knee,
        l_ank, r_ank,
    ]
}

/// Bones drawn as stroked segments, as (joint, joint) index pairs. The two
/// spine attachments use the virtual mid-hip point handled separately.
const BONES: [(Joint, Joint); 11] = [
    (Joint::Head, Joint::Neck),
    (Joint::Neck, Joint::LeftShoulder),
    (Joint::Neck, Joint::RightShoulder),
    (Joint::LeftShoulder, Joint::LeftElbow),
    (Joint::LeftElbow, Joint::LeftWrist),
    (Joint::RightShoulder, Joint::RightElbow),
    (Joint::RightElbow, Joint::RightWrist),
    (Joint::LeftHip, Joint::LeftKnee),
    (Joint::LeftKnee, Joint::LeftAnkle),
    (Joint::RightHip, Joint::RightKnee),
    (Joint::RightKnee, Joint::RightAnkle),
];

fn dist_to_segment(px: f32, py: f32, a: (f32, f32), b: (f32, f32)) -> f32 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (a.0 + t * dx - px, a.1 + t * dy - py);
    (ex * ex + ey * ey).sqrt()
}

/// Accumulates anti-aliased coverage of the figure over the frame.
fn rasterize_figure(
    joints: &[(f32, f32); JOINT_COUNT],
    size: u32,
    coverage: &mut [f32],
) {
    let stamp_segment = |coverage: &mut [f32], a: (f32, f32), b: (f32, f32), radius: f32| {
        let x_lo = (a.0.min(b.0) - radius - 1.0).floor().max(0.0) as u32;
        let x_hi = ((a.0.max(b.0) + radius + 1.0).floor() as i64).min(size as i64 - 1) as u32;
        let y_lo = (a.1.min(b.1) - radius - 1.0).floor().max(0.0) as u32;
        let y_hi = ((a.1.max(b.1) + radius + 1.0).floor() as i64).min(size as i64 - 1) as u32;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let d = dist_to_segment(x as f32 + 0.5, y as f32 + 0.5, a, b);
                let c = (radius - d + 0.5).clamp(0.0, 1.0);
                if c > 0.0 {
                    let idx = (y * size + x) as usize;
                    coverage[idx] = coverage[idx].max(c);
                }
            }
        }
    };

    for &(ja, jb) in &BONES {
        stamp_segment(
            coverage,
            joints[ja as usize],
            joints[jb as usize],
            STROKE_RADIUS - 0.5,
        );
    }
    // Spine and hip bar pass through the virtual mid-hip point.
    let mid_hip = (
        0.5 * (joints[Joint::LeftHip as usize].0 + joints[Joint::RightHip as usize].0),
        0.5 * (joints[Joint::LeftHip as usize].1 + joints[Joint::RightHip as usize].1),
    );
    stamp_segment(coverage, joints[Joint::Neck as usize], mid_hip, STROKE_RADIUS - 0.5);
    stamp_segment(
        coverage,
        joints[Joint::LeftHip as usize],
        joints[Joint::RightHip as usize],
        STROKE_RADIUS - 0.5,
    );
    // Head disc: same 1-px feathered edge as the strokes.
    let head = joints[Joint::Head as usize];
    let r = HEAD_RADIUS_U * size as f32 * UNIT_PER_SIZE;
    stamp_segment(coverage, head, head, r - 0.5);
}

/// Smooth drifting background: a fixed mid-gray plus seeded sinusoids
/// sampled at `(x - drift * t, y)`.
struct BackgroundTexture {
    // (amplitude, freq_x, freq_y, phase) per component
    waves: [(f32, f32, f32, f32); 4],
}

impl BackgroundTexture {
    fn from_rng<R: rand::Rng>(rng: &mut R) -> Self {
        let mut waves = [(0.0f32, 0.0, 0.0, 0.0); 4];
        for w in &mut waves {
            let amp = rng.random_range(10.0f32..30.0);
            let fx = rng.random_range(0.05f32..0.3);
            let fy = rng.random_range(0.05f32..0.3);
            let ph = rng.random_range(0.0f32..core::f32::consts::TAU);
            *w = (amp, fx, fy, ph);
        }
        Self { waves }
    }

    fn sample(&self, x: f32, y: f32) -> f32 {
        let mut v = 128.0;
        for &(amp, fx, fy, ph) in &self.waves {
            v += amp * (fx * x + fy * y + ph).sin();
        }
        v
    }
}

/// Renders one clip. Deterministic in `params.seed`; two calls with the same
/// parameters produce bit-identical frames and ground truth.
pub fn generate_clip(
    params: &SynthParams,
    video_id: &str,
) -> Result<(VideoClip, SynthGroundTruth), SynthError> {
    params.validate()?;
    let size = params.image_size;
    let sf = size as f32;

    let mut bg_rng = make_rng(params.seed, "synth.background");
    let texture = BackgroundTexture::from_rng(&mut bg_rng);
    let mut noise_rng = make_rng(params.seed, "synth.noise");
    let noise = Normal::<f32>::new(0.0, params.noise_sigma.max(0.0)).expect("sigma checked");

    let mut frames = Vec::with_capacity(params.n_frames as usize);
    let mut poses = Vec::with_capacity(params.n_frames as usize);
    let mut boxes = Vec::with_capacity(params.n_frames as usize);
    let mut phases = Vec::with_capacity(params.n_frames as usize);

    let mut coverage = alloc::vec![0.0f32; (size * size) as usize];
    for t in 0..params.n_frames {
        let phase = (t % params.period) as f32 / params.period as f32;
        let joints = joint_positions(params, phase);

        // A joint close to the border means the stroke (or head) could
        // leave the image; report the parameter interplay directly.
        let head_r = HEAD_RADIUS_U * sf * UNIT_PER_SIZE;
        for (j, &(x, y)) in joints.iter().enumerate() {
            let margin = if j == Joint::Head as usize {
                head_r + 1.0
            } else {
                STROKE_RADIUS + 1.0
            };
            if x < margin || y < margin || x > sf - margin || y > sf - margin {
                return Err(SynthError::FigureOutOfBounds {
                    frame_index: t,
                    image_size: size,
                    x,
                    y,
                });
            }
        }

        coverage.fill(0.0);
        rasterize_figure(&joints, size, &mut coverage);

        // Tight pixel box around every touched pixel, half-open on the
        // max side so touched pixel centers satisfy the inside test.
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let drift = params.background_motion * t as f32;
        let mut pixels = Vec::with_capacity((size * size) as usize);
        for y in 0..size {
            for x in 0..size {
                let cov = coverage[(y * size + x) as usize];
                if cov > COVERAGE_EPS {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
                let bg = texture.sample(x as f32 - drift, y as f32);
                let mut v = bg + cov * (INK - bg);
                if params.noise_sigma > 0.0 {
                    v += noise.sample(&mut noise_rng);
                }
                pixels.push(v.clamp(0.0, 255.0).round() as u8);
            }
        }
        debug_assert!(x0 <= x1 && y0 <= y1, "figure rendered no pixels");
        let gt_box = BoundingBox::new(x0 as f32, y0 as f32, (x1 + 1) as f32, (y1 + 1) as f32);

        frames.push(Frame {
            video_id: video_id.to_string(),
            frame_index: t,
            image: GrayImage::from_raw(size, size, pixels).expect("sized above"),
            person_box: gt_box,
        });
        poses.push(PoseAnnotation {
            joints,
            visibility: [true; JOINT_COUNT],
        });
        boxes.push(gt_box);
        phases.push(phase);
    }

    let clip = VideoClip::new(video_id.to_string(), frames)?;
    Ok((
        clip,
        SynthGroundTruth {
            video_id: video_id.to_string(),
            poses,
            boxes,
            period: params.period,
            phases,
        },
    ))
}

/// Cyclic distance between two phases in [0, 1): the shorter way around.
pub fn cyclic_phase_diff(a: f32, b: f32) -> f32 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

/// Phase window for benchmark positives (same pose) and negatives
/// (half-cycle apart).
pub const PHASE_TOLERANCE: f32 = 0.05;

/// Builds posture-benchmark exemplars from ground truth: for each sampled
/// query frame, ten same-phase positives and ten anti-phase negatives,
/// drawn without replacement.
pub fn generate_benchmark(
    gt: &SynthGroundTruth,
    n_exemplars: usize,
    rng_seed: u64,
) -> Result<Vec<BenchmarkExemplar>, SynthError> {
    let n = gt.phases.len();
    if n_exemplars == 0 {
        return Ok(Vec::new());
    }
    if n_exemplars > n {
        return Err(SynthError::TooFewQueries {
            requested: n_exemplars,
            available: n,
        });
    }
    let mut rng = make_rng(rng_seed, "synth.benchmark");
    let queries = sample_without_replacement(&mut rng, n, n_exemplars);

    let fid = |t: usize| FrameId {
        video_id: gt.video_id.clone(),
        frame_index: t as u32,
    };

    let mut exemplars = Vec::with_capacity(n_exemplars);
    // Window membership is decided on exact integer frame offsets; float
    // phases wobble at the window boundary (a one-frame step at period 20
    // is exactly the tolerance and must stay outside). With the tolerance
    // fixed at 1/20: d/period < 1/20 <=> 20*d < period, and
    // |d/period - 1/2| < 1/20 <=> 10*|2*d - period| < period.
    debug_assert!(PHASE_TOLERANCE == 0.05);
    let period = gt.period as usize;
    let cyclic_offset = |t: usize, q: usize| {
        let d = t.abs_diff(q) % period;
        d.min(period - d)
    };
    for (e, &q) in queries.iter().enumerate() {
        let pos_pool: Vec<usize> = (0..n)
            .filter(|&t| t != q && 20 * cyclic_offset(t, q) < period)
            .collect();
        let neg_pool: Vec<usize> = (0..n)
            .filter(|&t| t != q && 10 * (2 * cyclic_offset(t, q)).abs_diff(period) < period)
            .collect();
        if pos_pool.len() < EXEMPLAR_SET_SIZE {
            return Err(SynthError::TooFewCandidates {
                exemplar: e,
                query: q as u32,
                kind: "positive",
                found: pos_pool.len(),
                needed: EXEMPLAR_SET_SIZE,
            });
        }
        if neg_pool.len() < EXEMPLAR_SET_SIZE {
            return Err(SynthError::TooFewCandidates {
                exemplar: e,
                query: q as u32,
                kind: "negative",
                found: neg_pool.len(),
                needed: EXEMPLAR_SET_SIZE,
            });
        }
        let pos_pick = sample_without_replacement(&mut rng, pos_pool.len(), EXEMPLAR_SET_SIZE);
        let neg_pick = sample_without_replacement(&mut rng, neg_pool.len(), EXEMPLAR_SET_SIZE);
        let positives: Vec<FrameId> = pos_pick.iter().map(|&i| fid(pos_pool[i])).collect();
        let negatives: Vec<FrameId> = neg_pick.iter().map(|&i| fid(neg_pool[i])).collect();
        exemplars.push(BenchmarkExemplar::new(fid(q), positives, negatives)?);
    }
    Ok(exemplars)
}

// Used by error formatting when thiserror's display is not enough context.
impl SynthError {
    pub fn describe(&self) -> String {
        format!("{self}")
    }
}
