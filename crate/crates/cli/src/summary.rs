//! Mean and spread of reconstructed fields, split by a defect mask.

use std::fmt::Write as _;

use pdepet_core::{ParamBlock, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stats> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Stats {
            mean,
            std: var.sqrt(),
            count: v.len(),
        })
    }

    /// Coefficient of variation `std / |mean|`.
    pub fn cv(&self) -> f64 {
        self.std / self.mean.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSummary {
    pub block: ParamBlock,
    pub all: Stats,
    pub inside: Option<Stats>,
    pub outside: Option<Stats>,
}

/// Statistics of every block; `mask[c]` marks defect cells.
pub fn summarize(p: &ParameterSet, mask: &[bool]) -> Vec<BlockSummary> {
    ParamBlock::ALL
        .into_iter()
        .map(|b| {
            let v = p.block(b).values();
            let pick = |inside: bool| Stats::of(v.iter().zip(mask).filter(|(_, &m)| m == inside).map(|(&x, _)| x));
            BlockSummary {
                block: b,
                all: Stats::of(v.iter().copied()).expect("grids are nonempty"),
                inside: pick(true),
                outside: pick(false),
            }
        })
        .collect()
}

fn cell(s: Option<Stats>) -> String {
    match s {
        Some(s) => format!("{:>11.4e} ± {:<9.2e}", s.mean, s.std),
        None => format!("{:>11}   {:<9}", "-", ""),
    }
}

/// Fixed-width table, one block per line.
pub fn format_table(rows: &[BlockSummary]) -> String {
    let mut s = format!(
        "{:<5} {:>23} {:>23} {:>23}\n",
        "param", "mean ± std", "inside defect", "outside defect"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<5} {:>23} {:>23} {:>23}",
            r.block.name(),
            cell(Some(r.all)),
            cell(r.inside),
            cell(r.outside)
        );
    }
    s
}

pub fn summary_csv(rows: &[BlockSummary]) -> String {
    let mut s = String::from("param,mean,std,inside_mean,inside_std,outside_mean,outside_std\n");
    let f = |x: Option<Stats>| match x {
        Some(x) => format!("{:e},{:e}", x.mean, x.std),
        None => ",".to_string(),
    };
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{},{}",
            r.block.name(),
            r.all.mean,
            r.all.std,
            f(r.inside),
            f(r.outside)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdepet_core::Grid;

    #[test]
    fn stats_of_known_values() {
        let s = Stats::of([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.count, 4);
        assert!(Stats::of(std::iter::empty()).is_none());
    }

    #[test]
    fn split_by_mask() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        let mut p = ParameterSet::constant(g, &[1.0; 12]);
        p.block_mut(ParamBlock::K1).values_mut()[0] = 0.0;
        let mask = [true, false, false, false];
        let rows = summarize(&p, &mask);
        let k1 = &rows[ParamBlock::K1.index()];
        assert_eq!(k1.inside.unwrap().mean, 0.0);
        assert_eq!(k1.outside.unwrap().mean, 1.0);
        assert_eq!(k1.outside.unwrap().std, 0.0);
        let none = summarize(&p, &[false; 4]);
        assert!(none[0].inside.is_none());
        assert!(format_table(&none).contains("k1"));
        assert_eq!(summary_csv(&rows).lines().count(), 13);
    }
}
