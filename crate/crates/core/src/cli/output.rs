//! CSV and SVG emission. Floats are written with 17 significant digits so
//! they round-trip exactly; plots only draw values that also go to a CSV.

use std::fmt::Write as _;
use std::fs::File;
use std::io;
use std::path::Path;

/// `x` with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvTable {
    writer: csv::Writer<File>,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        writer.write_record(header)?;
        Ok(CsvTable { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(io::Error::from)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a polyline.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            markers: false,
        }
    }
}

/// A minimal line plot.
#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shaded x-intervals.
    pub bands: Vec<(f64, f64)>,
    pub band_label: String,
    pub equal_aspect: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let w = hi - lo;
            if w > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
                (lo - 0.05 * w, hi + 0.05 * w)
            } else {
                (lo - 0.5 - 0.5 * lo.abs(), hi + 0.5 + 0.5 * hi.abs())
            }
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        if self.equal_aspect {
            let pw = WIDTH - 2.0 * MARGIN;
            let ph = HEIGHT - 2.0 * MARGIN;
            let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            return (
                cx - 0.5 * scale * pw,
                cx + 0.5 * scale * pw,
                cy - 0.5 * scale * ph,
                cy + 0.5 * scale * ph,
            );
        }
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        for &(a, b) in &self.bands {
            let (a, b) = (px(a.max(x0)), px(b.min(x1)));
            if b > a {
                let _ = writeln!(
                    s,
                    r##"<rect x="{a:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="#cccccc" fill-opacity="0.5"/>"##,
                    b - a,
                    HEIGHT - 2.0 * MARGIN
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                px(fx),
                HEIGHT - MARGIN + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                py(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            if series.markers {
                for (x, y) in &pts {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                    );
                }
            } else {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
        }
        let mut legend: Vec<(&str, &str)> = self
            .series
            .iter()
            .enumerate()
            .filter(|(_, se)| !se.label.is_empty())
            .map(|(k, se)| (PALETTE[k % PALETTE.len()], se.label.as_str()))
            .collect();
        if !self.bands.is_empty() && !self.band_label.is_empty() {
            legend.push(("#cccccc", &self.band_label));
        }
        for (i, (color, label)) in legend.iter().enumerate() {
            let y = MARGIN + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                y - 9.0,
                WIDTH - MARGIN - 135.0,
                y,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_svg())
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            0.0,
            f64::MIN_POSITIVE,
        ] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_uses_newlines_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = CsvTable::create(&path, &["a", "b"]).unwrap();
        t.row([float(1.5), "x".into()]).unwrap();
        t.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1.5000000000000000e0,x\n");
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let mut p = Plot::new("t <1>", "x", "y");
        p.series.push(Series::line(
            "s",
            vec![(0.0, 0.0), (1.0, 2.0), (f64::NAN, 1.0)],
        ));
        p.bands.push((0.2, 0.4));
        let a = p.to_svg();
        assert_eq!(a, p.to_svg());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("t &lt;1&gt;"));
        assert!(!a.contains("NaN"));
    }

    #[test]
    fn degenerate_bounds_do_not_divide_by_zero() {
        let mut p = Plot::new("", "", "");
        p.series
            .push(Series::line("", vec![(1.0, 1.0), (1.0, 1.0)]));
        assert!(!p.to_svg().contains("NaN"));
        p.equal_aspect = true;
        assert!(!p.to_svg().contains("inf"));
    }
}
