//! Hand-rolled SVG plots: the convergence table with CI bars, and a d = 2
//! snapshot of one realization's capacities with the canonical cut
//! highlighted.

use latflow::capacity::CapacityField;
use latflow::cutset::Cutset;
use latflow::estimator::SampleSeries;
use latflow::lattice::BoxSpec;

/// Mean ratio per rung with 95% CI whiskers.
pub fn convergence_svg(series: &SampleSeries) -> String {
    let live: Vec<_> = series.summaries.iter().filter(|s| !s.skipped).collect();
    let width = 640.0;
    let height = 420.0;
    let ml = 70.0;
    let mr = 25.0;
    let mt = 30.0;
    let mb = 55.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    if live.is_empty() {
        svg.push_str("<text x=\"20\" y=\"40\">no completed rungs</text>\n</svg>\n");
        return svg;
    }
    let ymax = live
        .iter()
        .map(|s| s.ci_high)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1e-9)
        * 1.15;
    let ymin = 0.0f64;
    let plot_w = width - ml - mr;
    let plot_h = height - mt - mb;
    let x_of = |i: usize| ml + plot_w * (i as f64 + 0.5) / live.len() as f64;
    let y_of = |v: f64| mt + plot_h * (1.0 - (v - ymin) / (ymax - ymin));

    // axes and y grid
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    for i in 0..=4 {
        let v = ymin + (ymax - ymin) * i as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
            ml + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.3}</text>\n",
            ml - 6.0,
            y + 4.0
        ));
    }

    // polyline through the means
    let pts: Vec<String> = live
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{},{}", x_of(i), y_of(s.mean_ratio)))
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    for (i, s) in live.iter().enumerate() {
        let x = x_of(i);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#1f77b4\"/>\n",
            y_of(s.ci_low),
            y_of(s.ci_high)
        ));
        for v in [s.ci_low, s.ci_high] {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#1f77b4\"/>\n",
                x - 4.0,
                y_of(v),
                x + 4.0,
                y_of(v)
            ));
        }
        svg.push_str(&format!(
            "<circle cx=\"{x}\" cy=\"{}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            y_of(s.mean_ratio)
        ));
        let k = s
            .sides
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join("x");
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{k}:{}</text>\n",
            mt + plot_h + 18.0,
            s.height
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">mean passage time over base volume, 95% CI</text>\n",
        width / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// One d = 2 realization: edges in capacity grayscale, cut edges in red.
pub fn cut_svg(box_spec: &BoxSpec, field: &CapacityField, cut: &Cutset) -> String {
    let k = box_spec.sides()[0] as f64;
    let m = box_spec.height() as f64;
    let cell = (520.0 / k.max(m).max(1.0)).min(40.0);
    let pad = 30.0;
    let width = pad * 2.0 + cell * k;
    let height = pad * 2.0 + cell * m;
    let space = field.region();
    let px = |x: f64| pad + x * cell;
    let py = |y: f64| height - pad - y * cell;

    let mut maxcap = 1i64;
    let view = cut.view();
    for e in view.edges() {
        maxcap = maxcap.max(field.cap(e));
    }
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for e in view.edges() {
        let (u, v) = space.edge_endpoints(e);
        let pu = space.coords_of(u);
        let pv = space.coords_of(v);
        let c = field.cap(e);
        let is_cut = cut.contains_edge(e);
        let (stroke, sw) = if is_cut {
            ("#d62728".to_string(), 3.0)
        } else {
            // darker = larger capacity; closed edges nearly white
            let shade = 230 - ((c as f64 / maxcap as f64) * 180.0) as i32;
            (format!("rgb({shade},{shade},{shade})"), 1.5)
        };
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{sw}\"/>\n",
            px(pu[0] as f64),
            py(pu[1] as f64),
            px(pv[0] as f64),
            py(pv[1] as f64)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
