//! Infinite-state quantized plants: monotone 1-D dynamics with a binary
//! threshold sensor, a finite actuator alphabet and a band-membership
//! performance output.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{Decimal, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlantError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("invalid plant configuration: {0}")]
    Config(&'static str),
    #[error("state lies outside [0, h]")]
    Domain,
    #[error("empty interval")]
    EmptyInterval,
    #[error("unknown control symbol")]
    UnknownControl,
}

/// Binary sensor reading: `Full` iff the level is at or above the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sensor {
    Empty,
    Full,
}

impl Sensor {
    pub const ALL: [Sensor; 2] = [Sensor::Empty, Sensor::Full];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Sensor {
        match self {
            Sensor::Empty => Sensor::Full,
            Sensor::Full => Sensor::Empty,
        }
    }

    pub fn parse(text: &str) -> Option<Sensor> {
        match text {
            "Empty" => Some(Sensor::Empty),
            "Full" => Some(Sensor::Full),
            _ => None,
        }
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sensor::Empty => "Empty",
            Sensor::Full => "Full",
        })
    }
}

/// Index of a control symbol in its plant's actuator alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Control(pub u8);

impl Control {
    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

/// A half-open `[lo, hi)` or closed `[lo, hi]` interval of levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub hi_closed: bool,
}

impl Interval {
    pub fn half_open(lo: Rational, hi: Rational) -> Self {
        Self { lo, hi, hi_closed: false }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self { lo, hi, hi_closed: true }
    }

    pub fn point(x: Rational) -> Self {
        Self::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !self.hi_closed)
    }

    pub fn contains(&self, x: Rational) -> bool {
        x >= self.lo && (x < self.hi || (self.hi_closed && x == self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.hi_closed { ']' } else { ')' };
        write!(f, "[{}, {}{close}", Decimal(self.lo), Decimal(self.hi))
    }
}

/// Continuous nondecreasing piecewise-affine map on `[0, h]`, given by its
/// breakpoints; constant pieces model saturation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneMap {
    points: Vec<(Rational, Rational)>,
}

impl MonotoneMap {
    /// Breakpoints must start at 0, end at `height`, have strictly increasing
    /// abscissae and nondecreasing ordinates in `[0, height]`.
    pub fn new(points: Vec<(Rational, Rational)>, height: Rational) -> Result<Self, PlantError> {
        let ok_ends = points.len() >= 2
            && points[0].0.is_zero()
            && points[points.len() - 1].0 == height;
        let ok_shape = points
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        let ok_range = points.iter().all(|&(_, y)| !y.is_negative() && y <= height);
        if !(ok_ends && ok_shape && ok_range) {
            return Err(PlantError::Config("map must be monotone on [0, h] into [0, h]"));
        }
        Ok(Self { points })
    }

    pub fn identity(height: Rational) -> Self {
        Self {
            points: vec![(Rational::zero(), Rational::zero()), (height, height)],
        }
    }

    /// Index of the segment containing `x`, preferring the left segment at a
    /// breakpoint when `left` is set.
    fn segment(&self, x: Rational, left: bool) -> usize {
        let last = self.points.len() - 2;
        (0..=last)
            .find(|&i| {
                let (a, b) = (self.points[i].0, self.points[i + 1].0);
                if left {
                    a < x && x <= b
                } else {
                    a <= x && x < b
                }
            })
            .unwrap_or(if left { 0 } else { last })
    }

    pub fn eval(&self, x: Rational) -> Rational {
        let i = self.segment(x, false);
        let ((x0, y0), (x1, y1)) = (self.points[i], self.points[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Whether the map is constant just to the left of `x`.
    fn flat_left_of(&self, x: Rational) -> bool {
        let i = self.segment(x, true);
        self.points[i].1 == self.points[i + 1].1
    }

    /// Exact image of a nonempty interval. A half-open upper end becomes
    /// closed when the map is flat (saturated) just below it.
    pub fn image(&self, interval: Interval) -> Result<Interval, PlantError> {
        if interval.is_empty() {
            return Err(PlantError::EmptyInterval);
        }
        let lo = self.eval(interval.lo);
        let hi = self.eval(interval.hi);
        let closed = interval.hi_closed || lo == hi || self.flat_left_of(interval.hi);
        Ok(Interval { lo, hi, hi_closed: closed })
    }
}

/// Performance band `[lo, hi]`; membership is closed at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Band {
    pub lo: Rational,
    pub hi: Rational,
}

impl Band {
    pub fn contains(&self, x: Rational) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlAction {
    pub name: String,
    pub map: MonotoneMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plant1D {
    height: Rational,
    threshold: Rational,
    band: Band,
    controls: Vec<ControlAction>,
}

/// Physical parameters of the pump/drain tank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TankParams {
    /// Cross-section, cm^2.
    pub area: Rational,
    /// Height, cm.
    pub height: Rational,
    /// Pump rate, litres per minute.
    pub pump_rate: Rational,
    /// Sampling interval, seconds.
    pub sample_time: Rational,
    pub band: Band,
    /// Sensor threshold, cm.
    pub threshold: Rational,
}

impl TankParams {
    /// The reference tank: 100 cm^2, 30 cm tall, 1 l/min, 7.5 s sampling,
    /// band [22.5, 25] cm and the sensor at mid-height.
    pub fn reference() -> Self {
        Self {
            area: Rational::from_integer(100),
            height: Rational::from_integer(30),
            pump_rate: Rational::from_integer(1),
            sample_time: Rational::new(15, 2),
            band: Band {
                lo: Rational::new(45, 2),
                hi: Rational::from_integer(25),
            },
            threshold: Rational::from_integer(15),
        }
    }

    /// Per-step level change `1000 p T / (60 A)` in cm.
    pub fn displacement(&self) -> Rational {
        Rational::from_integer(1000) * self.pump_rate * self.sample_time
            / (Rational::from_integer(60) * self.area)
    }
}

impl Plant1D {
    pub fn new(
        height: Rational,
        threshold: Rational,
        band: Band,
        controls: Vec<ControlAction>,
    ) -> Result<Self, PlantError> {
        if !height.is_positive() {
            return Err(PlantError::NonPositive("height"));
        }
        if !(threshold.is_positive() && threshold < height) {
            return Err(PlantError::Config("threshold must lie strictly inside (0, h)"));
        }
        if band.lo.is_negative() || band.lo >= band.hi || band.hi > height {
            return Err(PlantError::Config("band must satisfy 0 <= lo < hi <= h"));
        }
        if controls.is_empty() || controls.len() > usize::from(u8::MAX) {
            return Err(PlantError::Config("control alphabet must have 1..=255 symbols"));
        }
        Ok(Self {
            height,
            threshold,
            band,
            controls,
        })
    }

    pub fn height(&self) -> Rational {
        self.height
    }

    pub fn threshold(&self) -> Rational {
        self.threshold
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn controls(&self) -> impl ExactSizeIterator<Item = Control> + '_ {
        (0..self.controls.len()).map(|i| Control(i as u8))
    }

    pub fn control_count(&self) -> usize {
        self.controls.len()
    }

    pub fn control_name(&self, u: Control) -> &str {
        &self.controls[u.index()].name
    }

    pub fn control_by_name(&self, name: &str) -> Option<Control> {
        self.controls
            .iter()
            .position(|c| c.name == name)
            .map(|i| Control(i as u8))
    }

    fn action(&self, u: Control) -> Result<&ControlAction, PlantError> {
        self.controls.get(u.index()).ok_or(PlantError::UnknownControl)
    }

    /// Sensor map; the threshold itself reads `Full`.
    pub fn sensor(&self, x: Rational) -> Sensor {
        if x >= self.threshold {
            Sensor::Full
        } else {
            Sensor::Empty
        }
    }

    /// Performance output: 0 inside the band, 1 outside.
    pub fn performance(&self, x: Rational) -> u8 {
        u8::from(!self.band.contains(x))
    }

    pub fn full_range(&self) -> Interval {
        Interval::closed(Rational::zero(), self.height)
    }

    pub fn step(&self, x: Rational, u: Control) -> Result<Rational, PlantError> {
        if !self.full_range().contains(x) {
            return Err(PlantError::Domain);
        }
        Ok(self.action(u)?.map.eval(x))
    }

    pub fn interval_image(&self, u: Control, interval: Interval) -> Result<Interval, PlantError> {
        if interval.is_empty() {
            return Err(PlantError::EmptyInterval);
        }
        if interval.lo.is_negative() || interval.hi > self.height {
            return Err(PlantError::Domain);
        }
        self.action(u)?.map.image(interval)
    }

    pub fn simulate_open_loop(&self, x0: Rational, inputs: &[Control]) -> Result<Trajectory, PlantError> {
        let mut rows = Vec::with_capacity(inputs.len() + 1);
        let mut x = x0;
        if !self.full_range().contains(x) {
            return Err(PlantError::Domain);
        }
        for (t, &u) in inputs.iter().enumerate() {
            rows.push(self.row(t, x, Some(u)));
            x = self.step(x, u)?;
        }
        rows.push(self.row(inputs.len(), x, None));
        Ok(Trajectory { rows })
    }

    fn row(&self, t: usize, x: Rational, u: Option<Control>) -> TrajectoryRow {
        TrajectoryRow {
            t,
            x,
            y: self.sensor(x),
            u,
            v: self.performance(x),
        }
    }
}

impl fmt::Display for Plant1D {
    /// Canonical one-line description, used for digests.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "plant1d h={} theta={} band=[{},{}]",
            self.height, self.threshold, self.band.lo, self.band.hi
        )?;
        for c in &self.controls {
            write!(f, " {}:", c.name)?;
            for (x, y) in &c.map.points {
                write!(f, "({x},{y})")?;
            }
        }
        Ok(())
    }
}

/// Builds the pump/drain tank: `Pump` adds and `Drain` removes the per-step
/// displacement, saturating at the tank's bottom and top.
pub fn make_tank(params: &TankParams) -> Result<Plant1D, PlantError> {
    for (name, value) in [
        ("area", params.area),
        ("height", params.height),
        ("pump_rate", params.pump_rate),
        ("sample_time", params.sample_time),
    ] {
        if !value.is_positive() {
            return Err(PlantError::NonPositive(name));
        }
    }
    let h = params.height;
    let delta = params.displacement();
    let zero = Rational::zero();
    let (pump, drain) = if delta < h {
        (
            vec![(zero, delta), (h - delta, h), (h, h)],
            vec![(zero, zero), (delta, zero), (h, h - delta)],
        )
    } else {
        (vec![(zero, h), (h, h)], vec![(zero, zero), (h, zero)])
    };
    Plant1D::new(
        h,
        params.threshold,
        params.band,
        vec![
            ControlAction {
                name: "Pump".into(),
                map: MonotoneMap::new(pump, h)?,
            },
            ControlAction {
                name: "Drain".into(),
                map: MonotoneMap::new(drain, h)?,
            },
        ],
    )
}

pub const PUMP: Control = Control(0);
pub const DRAIN: Control = Control(1);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub x: Rational,
    pub y: Sensor,
    /// Control applied at `t`; the final row of an open-loop run has none.
    pub u: Option<Control>,
    pub v: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}
