//! Wall-clock profiling of candidate operations on the CPU.
//!
//! Each operation is stood in for by a naive kernel of the right shape:
//! separable convolutions are depthwise k×k followed by pointwise 1×1
//! (stacked twice), dilated convolutions a single dilation-2 depthwise +
//! pointwise, pools a 3×3 window, identity a copy (or a strided 1×1
//! projection when the shape changes) and `none` a zero fill.

use std::hint::black_box;
use std::time::{Duration, Instant};

use lamot_core::latency::{
    profile_op, Clock, LatencyEntry, LatencyError, LatencyTable, OpConfig, OpKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_WARMUP: u32 = 10;
pub const DEFAULT_REPS: u32 = 100;

/// [`Clock`] backed by [`Instant`], measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&mut self) -> Duration {
        self.origin.elapsed()
    }
}

#[derive(Debug, Clone)]
struct Tensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f32>,
}

impl Tensor {
    fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    fn random(c: usize, h: usize, w: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut t = Self::zeros(c, h, w);
        t.data.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        t
    }

    fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.h + y) * self.w + x]
    }
}

fn out_size(n: usize, stride: usize) -> usize {
    n.div_ceil(stride)
}

/// Zero-padded depthwise convolution.
fn depthwise(input: &Tensor, weights: &[f32], k: usize, dilation: usize, stride: usize) -> Tensor {
    let (oh, ow) = (out_size(input.h, stride), out_size(input.w, stride));
    let mut out = Tensor::zeros(input.c, oh, ow);
    let reach = (k / 2 * dilation) as isize;
    for c in 0..input.c {
        let kw = &weights[c * k * k..(c + 1) * k * k];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f32;
                for ky in 0..k {
                    let y = (oy * stride) as isize + (ky * dilation) as isize - reach;
                    if y < 0 || y >= input.h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let x = (ox * stride) as isize + (kx * dilation) as isize - reach;
                        if x < 0 || x >= input.w as isize {
                            continue;
                        }
                        acc += kw[ky * k + kx] * input.at(c, y as usize, x as usize);
                    }
                }
                out.data[(c * oh + oy) * ow + ox] = acc;
            }
        }
    }
    out
}

fn pointwise(input: &Tensor, weights: &[f32], cout: usize, stride: usize) -> Tensor {
    let (oh, ow) = (out_size(input.h, stride), out_size(input.w, stride));
    let mut out = Tensor::zeros(cout, oh, ow);
    for o in 0..cout {
        let row = &weights[o * input.c..(o + 1) * input.c];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f32;
                for (c, w) in row.iter().enumerate() {
                    acc += w * input.at(c, oy * stride, ox * stride);
                }
                out.data[(o * oh + oy) * ow + ox] = acc.max(0.0);
            }
        }
    }
    out
}

fn pool(input: &Tensor, stride: usize, max: bool) -> Tensor {
    let (oh, ow) = (out_size(input.h, stride), out_size(input.w, stride));
    let mut out = Tensor::zeros(input.c, oh, ow);
    for c in 0..input.c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = if max { f32::NEG_INFINITY } else { 0.0 };
                let mut n = 0u32;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let y = (oy * stride) as isize + dy;
                        let x = (ox * stride) as isize + dx;
                        if y < 0 || x < 0 || y >= input.h as isize || x >= input.w as isize {
                            continue;
                        }
                        let v = input.at(c, y as usize, x as usize);
                        acc = if max { acc.max(v) } else { acc + v };
                        n += 1;
                    }
                }
                out.data[(c * oh + oy) * ow + ox] = if max { acc } else { acc / n as f32 };
            }
        }
    }
    out
}

/// Input and weights for one configuration, generated from a seed.
#[derive(Debug, Clone)]
pub struct OpWorkload {
    cfg: OpConfig,
    input: Tensor,
    depthwise: Vec<Vec<f32>>,
    pointwise: Vec<Vec<f32>>,
}

impl OpWorkload {
    pub fn new(cfg: OpConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cin, cout) = (cfg.shape.in_channels as usize, cfg.shape.out_channels as usize);
        let res = cfg.shape.resolution as usize;
        let input = Tensor::random(cin, res, res, &mut rng);
        let k = cfg.op.kernel().max(1);
        let mut weights = |n: usize| -> Vec<f32> { (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect() };
        let (depthwise, pointwise) = match cfg.op {
            OpKind::SepConv3 | OpKind::SepConv5 | OpKind::SepConv7 => (
                vec![weights(cin * k * k), weights(cout * k * k)],
                vec![weights(cout * cin), weights(cout * cout)],
            ),
            OpKind::DilConv3 | OpKind::DilConv5 => {
                (vec![weights(cin * k * k)], vec![weights(cout * cin)])
            }
            OpKind::MaxPool3 | OpKind::AvgPool3 | OpKind::Identity if cin != cout => {
                (Vec::new(), vec![weights(cout * cin)])
            }
            _ => (Vec::new(), Vec::new()),
        };
        Self {
            cfg,
            input,
            depthwise,
            pointwise,
        }
    }

    pub fn config(&self) -> OpConfig {
        self.cfg
    }

    /// Runs the kernel once; returns a checksum of the output.
    pub fn run(&self) -> f32 {
        let s = self.cfg.shape;
        let (stride, cout) = (s.stride.max(1) as usize, s.out_channels as usize);
        let k = self.cfg.op.kernel();
        let out = match self.cfg.op {
            OpKind::None => Tensor::zeros(cout, out_size(self.input.h, stride), out_size(self.input.w, stride)),
            OpKind::Identity if stride == 1 && self.input.c == cout => self.input.clone(),
            OpKind::Identity => pointwise(&self.input, &self.pointwise[0], cout, stride),
            OpKind::SepConv3 | OpKind::SepConv5 | OpKind::SepConv7 => {
                let x = depthwise(&self.input, &self.depthwise[0], k, 1, stride);
                let x = pointwise(&x, &self.pointwise[0], cout, 1);
                let x = depthwise(&x, &self.depthwise[1], k, 1, 1);
                pointwise(&x, &self.pointwise[1], cout, 1)
            }
            OpKind::DilConv3 | OpKind::DilConv5 => {
                let x = depthwise(&self.input, &self.depthwise[0], k, 2, stride);
                pointwise(&x, &self.pointwise[0], cout, 1)
            }
            OpKind::MaxPool3 | OpKind::AvgPool3 => {
                let x = pool(&self.input, stride, self.cfg.op == OpKind::MaxPool3);
                if self.pointwise.is_empty() {
                    x
                } else {
                    pointwise(&x, &self.pointwise[0], cout, 1)
                }
            }
        };
        out.data.iter().sum()
    }
}

/// Shape of the output a workload produces, as (channels, height, width).
pub fn output_shape(cfg: &OpConfig) -> (usize, usize, usize) {
    let res = out_size(cfg.shape.resolution as usize, cfg.shape.stride.max(1) as usize);
    (cfg.shape.out_channels as usize, res, res)
}

/// Profiles one configuration with `clock`.
pub fn profile_config(
    cfg: OpConfig,
    clock: &mut dyn Clock,
    warmup: u32,
    reps: u32,
    seed: u64,
) -> Result<LatencyEntry, LatencyError> {
    let workload = OpWorkload::new(cfg, seed);
    let mut run = || {
        black_box(workload.run());
    };
    profile_op(&mut run, clock, warmup, reps)
}

/// Profiles every configuration sequentially, in the given order.
pub fn profile_table(
    configs: &[OpConfig],
    clock: &mut dyn Clock,
    warmup: u32,
    reps: u32,
    seed: u64,
) -> Result<LatencyTable, LatencyError> {
    let mut table = LatencyTable::new();
    for (i, cfg) in configs.iter().enumerate() {
        let entry = profile_config(*cfg, clock, warmup, reps, seed.wrapping_add(i as u64))?;
        log::debug!("{cfg} mean_ms={}", entry.mean_ms);
        table.insert(*cfg, entry);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lamot_core::latency::OpShape;

    /// Advances a fixed step on every reading.
    struct StepClock {
        t: Duration,
        step: Duration,
    }

    impl Clock for StepClock {
        fn now(&mut self) -> Duration {
            self.t += self.step;
            self.t
        }
    }

    fn shape(cin: u32, cout: u32, res: u32, stride: u32) -> OpShape {
        OpShape {
            in_channels: cin,
            out_channels: cout,
            resolution: res,
            stride,
        }
    }

    #[test]
    fn workloads_run_every_op_and_shape() {
        for op in OpKind::ALL {
            for s in [shape(4, 4, 8, 1), shape(4, 8, 8, 2), shape(8, 8, 4, 1)] {
                let w = OpWorkload::new(OpConfig::new(op, s), 3);
                assert!(w.run().is_finite(), "{op} {s:?}");
            }
        }
        let none = OpWorkload::new(OpConfig::new(OpKind::None, shape(2, 2, 4, 1)), 0);
        assert_eq!(none.run(), 0.0);
        assert_eq!(output_shape(&OpConfig::new(OpKind::SepConv3, shape(4, 8, 9, 2))), (8, 5, 5));
    }

    #[test]
    fn identity_copies() {
        let w = OpWorkload::new(OpConfig::new(OpKind::Identity, shape(2, 2, 3, 1)), 5);
        assert_eq!(w.run(), w.input.data.iter().sum::<f32>());
    }

    #[test]
    fn workload_is_seeded() {
        let cfg = OpConfig::new(OpKind::DilConv5, shape(3, 3, 6, 1));
        assert_eq!(OpWorkload::new(cfg, 9).run(), OpWorkload::new(cfg, 9).run());
    }

    #[test]
    fn injected_clock_gives_exact_table() {
        let cfgs = [
            OpConfig::new(OpKind::MaxPool3, shape(2, 2, 4, 1)),
            OpConfig::new(OpKind::SepConv3, shape(2, 2, 4, 1)),
        ];
        let mut clock = StepClock {
            t: Duration::ZERO,
            step: Duration::from_micros(250),
        };
        let table = profile_table(&cfgs, &mut clock, 2, 5, 0).unwrap();
        for cfg in &cfgs {
            let e = table.get(cfg).unwrap();
            assert_eq!(e.mean_ms, 0.25);
            assert_eq!(e.std_ms, 0.0);
            assert_eq!(e.reps, 5);
        }
    }

    #[test]
    fn monotonic_clock_orders_readings() {
        let mut c = MonotonicClock::new();
        let a = c.now();
        let b = c.now();
        assert!(b >= a);
        let e = profile_config(OpConfig::new(OpKind::Identity, shape(1, 1, 2, 1)), &mut c, 0, 3, 0).unwrap();
        assert!(e.mean_ms >= 0.0);
    }
}
