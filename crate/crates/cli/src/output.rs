//! CSV and SVG artifacts for survival curves.

use std::fmt::Write as _;

/// Survival curves sharing one time axis, plus `# key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub metadata: Vec<(String, String)>,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// One column per label, each as long as `times`.
    pub columns: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed survival CSV: {0}")]
    Format(String),
}

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

impl CurveTable {
    pub fn to_csv(&self) -> Result<String, CsvError> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(self.labels.iter().map(|l| format!("P_T{l}")))
            .collect();
        w.write_record(&header)?;
        for (i, &t) in self.times.iter().enumerate() {
            let row: Vec<String> = std::iter::once(number(t))
                .chain(self.columns.iter().map(|c| number(c[i])))
                .collect();
            w.write_record(&row)?;
        }
        let body = w.into_inner().map_err(|e| CsvError::Format(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| CsvError::Format(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let metadata = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| {
                let body = l.trim_start_matches('#').trim();
                match body.split_once('=') {
                    Some((k, v)) => Ok((k.to_string(), v.to_string())),
                    None => Err(CsvError::Format(format!("metadata line without `=`: {l}"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(CsvError::Format("first column must be `t`".into()));
        }
        let labels = header
            .iter()
            .skip(1)
            .map(|h| {
                h.strip_prefix("P_T")
                    .map(str::to_string)
                    .ok_or_else(|| CsvError::Format(format!("column `{h}` lacks the P_T prefix")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut times = Vec::new();
        let mut columns = vec![Vec::new(); labels.len()];
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| CsvError::Format(format!("`{s}` is not a number")))
            };
            times.push(parse(&rec[0])?);
            for (c, v) in columns.iter_mut().zip(rec.iter().skip(1)) {
                c.push(parse(v)?);
            }
        }
        Ok(Self {
            metadata,
            labels,
            times,
            columns,
        })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Static line plot, one polyline per column.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 720.0;
        const H: f64 = 460.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 150.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 55.0;
        const COLORS: [&str; 8] = [
            "#2ca02c", "#d62728", "#1f77b4", "#000000", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
        ];
        let t_max = self.times.iter().copied().fold(0.0, f64::max);
        let t_span = if t_max > 0.0 { t_max } else { 1.0 };
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let x = |t: f64| LEFT + pw * t / t_span;
        let y = |p: f64| TOP + ph * (1.0 - p.clamp(0.0, 1.0));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let t = t_span * i as f64 / 5.0;
            let px = x(t);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{b2}" stroke="black"/><text x="{px:.2}" y="{ty}" text-anchor="middle">{}</text>"#,
                tick(t),
                b = TOP + ph,
                b2 = TOP + ph + 5.0,
                ty = TOP + ph + 20.0
            );
        }
        for i in 0..=4 {
            let p = i as f64 / 4.0;
            let py = y(p);
            let _ = writeln!(
                s,
                r#"<line x1="{l2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{}</text>"#,
                tick(p),
                l2 = LEFT - 5.0,
                tx = LEFT - 8.0,
                ty = py + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
            LEFT + pw / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">P(t)</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0
        );
        for (k, (label, col)) in self.labels.iter().zip(&self.columns).enumerate() {
            let color = COLORS[k % COLORS.len()];
            let points: Vec<String> = self
                .times
                .iter()
                .zip(col)
                .map(|(&t, &p)| format!("{:.2},{:.2}", x(t), y(p)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points.join(" ")
            );
            let ly = TOP + 15.0 + 18.0 * k as f64;
            let lx = W - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">kT/w23 = {}</text>"#,
                lx + 20.0,
                lx + 25.0,
                ly + 4.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CurveTable {
        CurveTable {
            metadata: vec![("omega1".into(), "20".into()), ("T0.1.cutoffs".into(), "3,4".into())],
            labels: vec!["0.1".into(), "10".into()],
            times: vec![0.0, 0.1, 0.30000000000000004],
            columns: vec![vec![1.0, 0.9876543210987654, 1e-300], vec![1.0, 0.5, 0.1]],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("# omega1=20\n"));
        assert!(text.contains("t,P_T0.1,P_T10\n"));
        assert_eq!(CurveTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn svg_has_one_polyline_per_curve() {
        let svg = sample().to_svg("demo");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
