//! Minimal SVG rendering of toy-descent frames.
//!
//! One frame per trajectory record: the points as circles whose radius
//! scales with their weight, the fitted line and the target line. The data
//! window is fixed so consecutive frames animate without jumping.

use curvefit::CurveParams;

use crate::toy::TrajectoryRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const X_MIN: f64 = -0.1;
const X_MAX: f64 = 1.1;
const Y_MIN: f64 = -0.5;
const Y_MAX: f64 = 1.5;

fn px(x: f64) -> f64 {
    (x - X_MIN) / (X_MAX - X_MIN) * WIDTH
}

fn py(y: f64) -> f64 {
    // SVG y grows downward; the plot should not.
    HEIGHT - (y - Y_MIN) / (Y_MAX - Y_MIN) * HEIGHT
}

fn line_path(curve: &CurveParams) -> String {
    format!(
        r#"M {:.2} {:.2} L {:.2} {:.2}"#,
        px(X_MIN),
        py(curve.evaluate(X_MIN)),
        px(X_MAX),
        py(curve.evaluate(X_MAX))
    )
}

/// Renders one frame. Circle radius is proportional to the weight
/// (6 px at weight 1), so a silenced point visibly disappears.
pub fn render_toy_frame(rec: &TrajectoryRecord, target: &CurveParams) -> String {
    let mut out = String::with_capacity(2048);
    out.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
"#
    ));
    out.push_str(&format!(
        "<path d=\"{}\" stroke=\"#2a9d2a\" stroke-width=\"2\" stroke-dasharray=\"8 5\" fill=\"none\"/>\n",
        line_path(target)
    ));
    out.push_str(&format!(
        "<path d=\"{}\" stroke=\"#2060c0\" stroke-width=\"2\" fill=\"none\"/>\n",
        line_path(&rec.beta)
    ));
    for i in 0..rec.points.len() {
        let (x, y, w) = (rec.points.xs()[i], rec.points.ys()[i], rec.points.ws()[i]);
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#303030\" fill-opacity=\"0.75\"/>\n",
            px(x),
            py(y),
            6.0 * w
        ));
    }
    out.push_str(&format!(
        "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">step {}  loss {:.3e}</text>\n",
        rec.step, rec.loss
    ));
    out.push_str("</svg>\n");
    out
}
