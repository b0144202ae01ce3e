use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub param: f64,
    pub pps: f64,
    pub qs: f64,
}

/// Points in strictly increasing privacy-preserving score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub mechanism: String,
    pub engine: String,
    points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    /// Sorts by score and merges points of equal PPS, keeping the one with
    /// the higher QS (the smaller parameter on ties).
    pub fn new(
        mechanism: impl Into<String>,
        engine: impl Into<String>,
        points: impl IntoIterator<Item = TradeoffPoint>,
    ) -> Result<TradeoffCurve, EvalError> {
        let mut points: Vec<TradeoffPoint> = points.into_iter().collect();
        for p in &points {
            for v in [p.pps, p.qs] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(EvalError::ScoreOutOfRange(v));
                }
            }
        }
        points.sort_by(|a, b| {
            a.pps
                .total_cmp(&b.pps)
                .then(b.qs.total_cmp(&a.qs))
                .then(a.param.total_cmp(&b.param))
        });
        points.dedup_by(|later, kept| later.pps == kept.pps);
        Ok(TradeoffCurve {
            mechanism: mechanism.into(),
            engine: engine.into(),
            points,
        })
    }

    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `param,pps,qs` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut writer = csv::Writer::from_writer(out);
        for p in &self.points {
            writer.serialize(p)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Read the CSV form back. Mechanism and engine are not part of it.
    pub fn read_csv(
        source: &str,
        mechanism: impl Into<String>,
        engine: impl Into<String>,
    ) -> Result<TradeoffCurve, EvalError> {
        let mut reader = csv::Reader::from_reader(source.as_bytes());
        let points = reader.deserialize().collect::<Result<Vec<TradeoffPoint>, _>>()?;
        Self::new(mechanism, engine, points)
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite score")
}

fn round(x: &BigRational) -> f64 {
    x.to_f64().expect("finite")
}

/// Area under the quality/privacy curve: the rectangle under the first
/// point plus trapezoids between neighbours. Summed exactly and rounded
/// once, so hand-computed fixtures come out exact.
pub fn aupqc(curve: &TradeoffCurve) -> Result<f64, EvalError> {
    let points = curve.points();
    let first = points.first().ok_or(EvalError::EmptyCurve)?;
    let mut area = exact(first.pps) * exact(first.qs);
    let two = BigRational::from_integer(BigInt::from(2));
    for pair in points.windows(2) {
        let width = exact(pair[1].pps) - exact(pair[0].pps);
        area += width * (exact(pair[0].qs) + exact(pair[1].qs)) / &two;
    }
    Ok(round(&area))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QsAt {
    pub value: f64,
    /// `p` lies beyond the largest measured PPS.
    pub extrapolated: bool,
}

/// Quality at privacy level `p`: linear interpolation between the
/// bracketing points, the first point's QS below the curve and the last
/// point's QS (flagged) above it.
pub fn qs_at(curve: &TradeoffCurve, p: f64) -> Result<QsAt, EvalError> {
    let points = curve.points();
    let first = points.first().ok_or(EvalError::EmptyCurve)?;
    let last = points.last().expect("non-empty");
    if p <= first.pps {
        return Ok(QsAt {
            value: first.qs,
            extrapolated: false,
        });
    }
    if p > last.pps {
        return Ok(QsAt {
            value: last.qs,
            extrapolated: true,
        });
    }
    let i = points.partition_point(|pt| pt.pps < p);
    let (lo, hi) = (points[i - 1], points[i]);
    if hi.pps == p {
        return Ok(QsAt {
            value: hi.qs,
            extrapolated: false,
        });
    }
    let t = (exact(p) - exact(lo.pps)) / (exact(hi.pps) - exact(lo.pps));
    let value = exact(lo.qs) + t * (exact(hi.qs) - exact(lo.qs));
    Ok(QsAt {
        value: round(&value),
        extrapolated: false,
    })
}

/// Summary of one curve, as written by the report emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub mechanism: String,
    pub engine: String,
    pub aupqc: f64,
    /// Keyed by the threshold formatted as written.
    pub qs_at: BTreeMap<String, f64>,
}

impl CurveReport {
    pub fn new(curve: &TradeoffCurve, thresholds: &[f64]) -> Result<CurveReport, EvalError> {
        let mut qs = BTreeMap::new();
        for &p in thresholds {
            qs.insert(p.to_string(), qs_at(curve, p)?.value);
        }
        Ok(CurveReport {
            mechanism: curve.mechanism.clone(),
            engine: curve.engine.clone(),
            aupqc: aupqc(curve)?,
            qs_at: qs,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, f64)]) -> TradeoffCurve {
        TradeoffCurve::new(
            "m",
            "e",
            points.iter().enumerate().map(|(i, &(pps, qs))| TradeoffPoint {
                param: i as f64,
                pps,
                qs,
            }),
        )
        .unwrap()
    }

    #[test]
    fn aupqc_fixtures() {
        assert_eq!(aupqc(&curve(&[(0.2, 0.9), (0.5, 0.7)])).unwrap(), 0.42);
        assert_eq!(aupqc(&curve(&[(0.3, 0.7)])).unwrap(), 0.3 * 0.7);
        assert_eq!(aupqc(&curve(&[(0.5, 0.8), (0.5, 0.8)])).unwrap(), 0.4);
        assert!(matches!(aupqc(&curve(&[])), Err(EvalError::EmptyCurve)));
    }

    #[test]
    fn merge_keeps_best_quality() {
        let c = curve(&[(0.5, 0.6), (0.1, 0.9), (0.5, 0.8)]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1].qs, 0.8);
    }

    #[test]
    fn out_of_range_rejected() {
        let bad = TradeoffCurve::new(
            "m",
            "e",
            [TradeoffPoint {
                param: 0.0,
                pps: 1.2,
                qs: 0.5,
            }],
        );
        assert!(matches!(bad, Err(EvalError::ScoreOutOfRange(_))));
    }

    #[test]
    fn qs_at_interpolates_and_clamps() {
        let c = curve(&[(0.4, 0.9), (0.6, 0.7)]);
        assert_eq!(
            qs_at(&c, 0.5).unwrap(),
            QsAt {
                value: 0.8,
                extrapolated: false
            }
        );
        assert_eq!(qs_at(&c, 0.6).unwrap().value, 0.7);
        assert_eq!(qs_at(&c, 0.4).unwrap().value, 0.9);
        assert_eq!(
            qs_at(&c, 0.1).unwrap(),
            QsAt {
                value: 0.9,
                extrapolated: false
            }
        );
        assert_eq!(
            qs_at(&c, 0.99).unwrap(),
            QsAt {
                value: 0.7,
                extrapolated: true
            }
        );
    }

    #[test]
    fn csv_round_trip() {
        let c = curve(&[(0.2, 0.9), (0.5, 0.7)]);
        let text = c.to_csv();
        assert!(text.starts_with("param,pps,qs\n"));
        assert_eq!(TradeoffCurve::read_csv(&text, "m", "e").unwrap(), c);
    }

    #[test]
    fn report_json() {
        let c = curve(&[(0.2, 0.9), (0.5, 0.7)]);
        let report = CurveReport::new(&c, &[0.3, 0.5]).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["aupqc"], 0.42);
        assert_eq!(json["qs_at"]["0.5"], 0.7);
        assert_eq!(json["mechanism"], "m");
    }
}
