//! CSV ingestion, derived-feature recipes, and JSON/CSV output helpers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;
use crate::scalar::Scalar;

/// Layout of a covariate/response CSV file. A header row is required.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub response: String,
    pub delimiter: u8,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { response: "y".into(), delimiter: b',' }
    }
}

/// Reads a CSV file; every column except the response is a covariate, in file order.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<T: Scalar, R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Csv("file is empty (no header row)".into()));
    }
    let response_col = headers
        .iter()
        .position(|h| *h == schema.response)
        .ok_or_else(|| Error::Csv(format!("missing response column `{}`", schema.response)))?;
    let covariate_names: Vec<String> =
        headers.iter().enumerate().filter(|&(j, _)| j != response_col).map(|(_, h)| h.clone()).collect();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let row = i + 1;
        if record.len() != headers.len() {
            return Err(Error::Csv(format!("row {row}: {} fields, header has {}", record.len(), headers.len())));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Csv(format!("row {row}, column `{}`: `{cell}` is not a number", headers[j]))
            })?;
            if !v.is_finite() {
                return Err(Error::Csv(format!("row {row}, column `{}`: `{cell}` is not finite", headers[j])));
            }
            let v = T::lit(v);
            if j == response_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(Error::Csv("file has a header but no data rows".into()));
    }
    let x = Matrix::from_row_major(ys.len(), covariate_names.len(), xs)?;
    Dataset::with_names(x, ys, covariate_names)
}

/// A derived covariate. Indices are 1-based covariate positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureTerm {
    Identity(usize),
    Square(usize),
    Cube(usize),
    Product(usize, usize),
    Sin(usize),
    Cos(usize),
    Abs(usize),
    Tanh(usize),
}

impl FeatureTerm {
    #[inline]
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match *self {
            FeatureTerm::Identity(i) => x[i - 1],
            FeatureTerm::Square(i) => x[i - 1] * x[i - 1],
            FeatureTerm::Cube(i) => x[i - 1] * x[i - 1] * x[i - 1],
            FeatureTerm::Product(i, j) => x[i - 1] * x[j - 1],
            FeatureTerm::Sin(i) => x[i - 1].sin(),
            FeatureTerm::Cos(i) => x[i - 1].cos(),
            FeatureTerm::Abs(i) => x[i - 1].abs(),
            FeatureTerm::Tanh(i) => x[i - 1].tanh(),
        }
    }

    fn indices(&self) -> Vec<usize> {
        match *self {
            FeatureTerm::Product(i, j) => vec![i, j],
            FeatureTerm::Identity(i)
            | FeatureTerm::Square(i)
            | FeatureTerm::Cube(i)
            | FeatureTerm::Sin(i)
            | FeatureTerm::Cos(i)
            | FeatureTerm::Abs(i)
            | FeatureTerm::Tanh(i) => vec![i],
        }
    }

    fn label(&self, names: &[String]) -> String {
        let n = |i: usize| names[i - 1].as_str();
        match *self {
            FeatureTerm::Identity(i) => n(i).to_string(),
            FeatureTerm::Square(i) => format!("{}^2", n(i)),
            FeatureTerm::Cube(i) => format!("{}^3", n(i)),
            FeatureTerm::Product(i, j) => format!("{}*{}", n(i), n(j)),
            FeatureTerm::Sin(i) => format!("sin({})", n(i)),
            FeatureTerm::Cos(i) => format!("cos({})", n(i)),
            FeatureTerm::Abs(i) => format!("abs({})", n(i)),
            FeatureTerm::Tanh(i) => format!("tanh({})", n(i)),
        }
    }
}

impl fmt::Display for FeatureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FeatureTerm::Identity(i) => write!(f, "identity({i})"),
            FeatureTerm::Square(i) => write!(f, "square({i})"),
            FeatureTerm::Cube(i) => write!(f, "cube({i})"),
            FeatureTerm::Product(i, j) => write!(f, "product({i},{j})"),
            FeatureTerm::Sin(i) => write!(f, "sin({i})"),
            FeatureTerm::Cos(i) => write!(f, "cos({i})"),
            FeatureTerm::Abs(i) => write!(f, "abs({i})"),
            FeatureTerm::Tanh(i) => write!(f, "tanh({i})"),
        }
    }
}

impl FromStr for FeatureTerm {
    type Err = Error;

    /// Parses `square(5)`, `product(5,6)` and the like.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse feature term `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<usize> = inner
            .split(',')
            .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let one = |f: fn(usize) -> FeatureTerm| match args.as_slice() {
            [i] => Ok(f(*i)),
            _ => Err(bad()),
        };
        match &s[..open] {
            "identity" => one(FeatureTerm::Identity),
            "square" => one(FeatureTerm::Square),
            "cube" => one(FeatureTerm::Cube),
            "sin" => one(FeatureTerm::Sin),
            "cos" => one(FeatureTerm::Cos),
            "abs" => one(FeatureTerm::Abs),
            "tanh" => one(FeatureTerm::Tanh),
            "product" => match args.as_slice() {
                [i, j] => Ok(FeatureTerm::Product(*i, *j)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Parses a `;`-separated recipe such as `square(5);square(6);product(5,6)`.
pub fn parse_recipe(s: &str) -> Result<Vec<FeatureTerm>> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

/// Appends one derived column per recipe term.
pub fn feature_expand<T: Scalar>(data: &Dataset<T>, recipe: &[FeatureTerm]) -> Result<Dataset<T>> {
    let p = data.p();
    for term in recipe {
        if let Some(&bad) = term.indices().iter().find(|&&i| i == 0 || i > p) {
            return Err(Error::Config(format!("feature term {term} refers to covariate {bad}, but p = {p}")));
        }
    }
    let q = p + recipe.len();
    let mut xs = Vec::with_capacity(data.n() * q);
    for row in data.x.row_iter() {
        xs.extend_from_slice(row);
        xs.extend(recipe.iter().map(|t| t.eval(row)));
    }
    let mut names = data.covariate_names.clone();
    names.extend(recipe.iter().map(|t| t.label(&data.covariate_names)));
    Dataset::with_names(Matrix::from_row_major(data.n(), q, xs)?, data.y.clone(), names)
}

/// The quadratic-geography recipe: squares of covariates 5 and 6 and their product.
pub fn quadratic_geo_recipe() -> Vec<FeatureTerm> {
    vec![FeatureTerm::Square(5), FeatureTerm::Square(6), FeatureTerm::Product(5, 6)]
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
