//! CSV and SVG emission, measured-data CSV reading.

use std::fmt::Write as _;
use std::io::{Read, Write};

use fracfreq::identify::MeasuredResponse;
use fracfreq::stability::{critical_point, NyquistCurve};
use fracfreq::{Complex64, FrequencyResponseSet, Margins};

use crate::CliError;

pub const RESPONSE_HEADER: [&str; 5] = ["omega", "re", "im", "mag_db", "phase_deg"];
pub const CURVE_HEADER: [&str; 3] = ["omega", "re", "im"];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_response_csv<W: Write>(resp: &FrequencyResponseSet, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESPONSE_HEADER)?;
    for (k, phase) in resp.phase_deg().enumerate() {
        let v = resp.values[k];
        w.write_record([
            fmt17(resp.omegas[k]),
            fmt17(v.re),
            fmt17(v.im),
            fmt17(resp.mag_db[k]),
            fmt17(phase),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(curve: &NyquistCurve, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for (omega, p) in curve.contour_omegas().into_iter().zip(curve.contour()) {
        w.write_record([fmt17(omega), fmt17(p.re), fmt17(p.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `omega,re,im[,weight]`. Columns are matched by header name, so
/// extra columns (such as a response CSV's `mag_db`) are ignored.
pub fn read_measured_csv<R: Read>(input: R) -> Result<MeasuredResponse, CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(iw), Some(ire), Some(iim)) = (column("omega"), column("re"), column("im")) else {
        return Err(CliError::Input(format!(
            "measured data needs columns omega,re,im; found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let iweight = column("weight");

    let (mut omegas, mut values, mut weights) = (Vec::new(), Vec::new(), Vec::new());
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64, CliError> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>().map_err(|_| {
                CliError::Input(format!("data row {}: cannot parse '{text}' as a number", line + 2))
            })
        };
        omegas.push(field(iw)?);
        values.push(Complex64::new(field(ire)?, field(iim)?));
        weights.push(match iweight {
            Some(i) => field(i)?,
            None => 1.0,
        });
    }
    Ok(MeasuredResponse::new(omegas, values, weights)?)
}

struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y + self.h - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * self.h
    }

    fn polyline(&self, svg: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
        let coords: Vec<String> = pts
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn border(&self, svg: &mut String, title: &str) {
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            self.x, self.y, self.w, self.h
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="13">{title}</text>"#, self.x, self.y - 6.0);
    }

    fn hline(&self, svg: &mut String, y: f64, label: &str) {
        let py = self.py(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
            self.x,
            self.x + self.w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"#,
            self.x - 4.0,
            py + 3.0
        );
    }

    fn vline(&self, svg: &mut String, x: f64, label: &str) {
        let px = self.px(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
            self.y,
            self.y + self.h
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" font-size="10" text-anchor="middle">{label}</text>"#,
            self.y + self.h + 14.0
        );
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn finite_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// Magnitude and phase panels against log10 ω, with margin annotations.
pub fn bode_svg(resp: &FrequencyResponseSet, margins: &Margins) -> String {
    let logw: Vec<f64> = resp.omegas.iter().map(|w| w.log10()).collect();
    let x_range = (logw[0], *logw.last().unwrap());
    let x_range = if x_range.1 > x_range.0 { x_range } else { padded(x_range.0, x_range.1) };
    let phase: Vec<f64> = resp.phase_deg().collect();
    let (mlo, mhi) = finite_range(resp.mag_db.iter().copied().chain([0.0]));
    let (plo, phi) = finite_range(phase.iter().copied());
    let mag = Frame { x: 70.0, y: 30.0, w: 680.0, h: 240.0, x_range, y_range: padded(mlo, mhi) };
    let ph = Frame { x: 70.0, y: 320.0, w: 680.0, h: 240.0, x_range, y_range: padded(plo.min(-180.0), phi) };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" font-family="sans-serif">"#);
    mag.border(&mut svg, "Magnitude [dB]");
    ph.border(&mut svg, "Phase [deg]");
    for d in (x_range.0.ceil() as i32)..=(x_range.1.floor() as i32) {
        mag.vline(&mut svg, d as f64, "");
        ph.vline(&mut svg, d as f64, &format!("1e{d}"));
    }
    mag.hline(&mut svg, 0.0, "0");
    ph.hline(&mut svg, -180.0, "-180");
    for (f, label) in [(&mag, mag.y_range.1), (&ph, ph.y_range.1)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{label:.1}</text>"#, f.x - 4.0, f.y + 10.0);
    }
    mag.polyline(&mut svg, logw.iter().copied().zip(resp.mag_db.iter().copied()), "steelblue");
    ph.polyline(&mut svg, logw.iter().copied().zip(phase.iter().copied()), "darkorange");

    let mut notes = Vec::new();
    if let (Some(gm), Some(w)) = (margins.gain_margin_db, margins.phase_crossover_omega) {
        notes.push(format!("GM = {gm:.3} dB at {w:.4} rad/s"));
    }
    if let (Some(pm), Some(w)) = (margins.phase_margin_deg, margins.gain_crossover_omega) {
        notes.push(format!("PM = {pm:.3} deg at {w:.4} rad/s"));
    }
    for (i, n) in notes.iter().enumerate() {
        let _ = writeln!(svg, r#"<text x="560" y="{}" font-size="11">{n}</text>"#, 20.0 + 12.0 * i as f64);
    }
    let _ = writeln!(svg, r#"<text x="410" y="595" font-size="11" text-anchor="middle">omega [rad/s]</text>"#);
    svg.push_str("</svg>\n");
    svg
}

/// Nyquist contour with the critical point marked, on equal axes.
pub fn nyquist_svg(curve: &NyquistCurve) -> String {
    let contour = curve.contour();
    let crit = critical_point();
    let (rlo, rhi) = finite_range(contour.iter().map(|p| p.re).chain([crit.re, 0.0]));
    let (ilo, ihi) = finite_range(contour.iter().map(|p| p.im).chain([0.0]));
    let half = 0.5 * (rhi - rlo).max(ihi - ilo).max(2.0);
    let (cx, cy) = (0.5 * (rlo + rhi), 0.5 * (ilo + ihi));
    let frame = Frame {
        x: 60.0,
        y: 30.0,
        w: 520.0,
        h: 520.0,
        x_range: padded(cx - half, cx + half),
        y_range: padded(cy - half, cy + half),
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="640" height="600" font-family="sans-serif">"#);
    frame.border(&mut svg, "Nyquist: Im vs Re");
    frame.hline(&mut svg, 0.0, "0");
    frame.vline(&mut svg, 0.0, "0");
    frame.polyline(&mut svg, contour.iter().map(|p| (p.re, p.im)), "steelblue");
    let (px, py) = (frame.px(crit.re), frame.py(crit.im));
    let _ = writeln!(
        svg,
        r#"<path d="M {:.2} {:.2} l 10 10 m -10 0 l 10 -10" stroke="red" stroke-width="2"/>"#,
        px - 5.0,
        py - 5.0
    );
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="red">(-1, 0)</text>"#, px + 8.0, py - 8.0);
    svg.push_str("</svg>\n");
    svg
}
