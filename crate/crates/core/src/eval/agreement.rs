use super::EvalError;
use crate::analyzer::round_half_away;

/// Target score from several annotator ratings: the median, where an even
/// count takes the mean of the two middle ratings rounded half away from
/// zero (`[2, 5]` gives 4).
pub fn aggregate_annotations(ratings: &[i64]) -> Result<i64, EvalError> {
    if ratings.is_empty() {
        return Err(EvalError::NoRatings);
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Ok(sorted[mid])
    } else {
        Ok(round_half_away((sorted[mid - 1] + sorted[mid]) as f64 / 2.0) as i64)
    }
}

/// Two-way random-effects, absolute-agreement, single-rater intraclass
/// correlation ICC(2,1) of a messages × raters matrix.
///
/// `(BMS - EMS) / (BMS + (k-1)·EMS + k·(JMS - EMS)/n)` from the row (BMS),
/// column (JMS) and residual (EMS) mean squares. A matrix of identical
/// ratings has perfect agreement and yields 1.
pub fn icc(ratings: &[Vec<f64>]) -> Result<f64, EvalError> {
    let n = ratings.len();
    let k = ratings.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(EvalError::IccShape { rows: n, raters: k });
    }
    if let Some(row) = ratings.iter().position(|r| r.len() != k) {
        return Err(EvalError::RaggedRatings { row });
    }
    if ratings.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteRating);
    }
    let first = ratings[0][0];
    if ratings.iter().flatten().all(|&v| v == first) {
        return Ok(1.0);
    }

    let (nf, kf) = (n as f64, k as f64);
    let grand = ratings.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = ratings.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| ratings.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_err: f64 = ratings
        .iter()
        .zip(&row_means)
        .flat_map(|(r, rm)| {
            r.iter()
                .zip(&col_means)
                .map(move |(v, cm)| (v - rm - cm + grand).powi(2))
        })
        .sum();

    let bms = ss_rows / (nf - 1.0);
    let jms = ss_cols / (kf - 1.0);
    let ems = ss_err / ((nf - 1.0) * (kf - 1.0));
    let denominator = bms + (kf - 1.0) * ems + kf * (jms - ems) / nf;
    if denominator <= 0.0 {
        return Err(EvalError::DegenerateIcc);
    }
    Ok((bms - ems) / denominator)
}

/// Reads a ratings matrix from CSV: one row per message, one column per
/// rater. A header row is skipped when its first field is not a number.
pub fn read_ratings_csv<R: std::io::Read>(input: R) -> Result<Vec<Vec<f64>>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| EvalError::Ratings(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(EvalError::Ratings(format!("line {}: {e}", i + 1)));
            }
        }
    }
    Ok(rows)
}
