use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: for<'py> FnOnce(Python<'py>, &Bound<'py, PyDict>)>(f: F) {
    Python::attach(|py| {
        let m = PyModule::new(py, "patternforge").unwrap();
        patternforge_py::patternforge_module(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("pf", m).unwrap();
        f(py, &globals);
    });
}

fn eval<'py>(py: Python<'py>, globals: &Bound<'py, PyDict>, expr: &str) -> Bound<'py, PyAny> {
    let code = std::ffi::CString::new(expr).unwrap();
    py.eval(&code, Some(globals), None).unwrap_or_else(|e| panic!("{expr}: {e}"))
}

fn run(py: Python<'_>, globals: &Bound<'_, PyDict>, src: &str) {
    let code = std::ffi::CString::new(src).unwrap();
    py.run(&code, Some(globals), None).unwrap_or_else(|e| panic!("{e}\n{src}"));
}

#[test]
fn catalog_and_instances() {
    with_module(|py, g| {
        assert_eq!(eval(py, g, "len(pf.catalog())").extract::<usize>().unwrap(), 34);
        run(
            py,
            g,
            r#"
inst = pf.sample_instance("Rotate", 7)
assert inst == pf.sample_instance("Rotate", 7)
assert inst["pattern_id"] == "Rotate"
img = pf.Image.synthetic(3, 48, 40)
out = pf.apply(img, inst)
assert out == pf.apply(img, inst)
combo = pf.sample_combo("novel", 11, 2, 2)
assert len(combo) == 2
assert pf.apply_combo(img, combo).width > 0
assert pf.combo_key(["b", "a", "b"]) == "a+b"
"#,
        );
    });
}

#[test]
fn derive_seed_matches_core() {
    with_module(|py, g| {
        let got: u64 = eval(py, g, "pf.derive_seed(42, 'Q000001', 3)").extract().unwrap();
        assert_eq!(got, patternforge::seed::derive_seed(42, "Q000001", 3));
    });
}

#[test]
fn image_bytes_roundtrip_and_errors() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
img = pf.Image(2, 1, bytes([1, 2, 3, 4, 5, 6]))
assert img.tobytes() == bytes([1, 2, 3, 4, 5, 6])
try:
    pf.Image(2, 2, b"abc")
    raise AssertionError("short buffer accepted")
except ValueError:
    pass
try:
    pf.Image.load("/nonexistent/x.png")
    raise AssertionError("missing file accepted")
except OSError:
    pass
try:
    pf.sample_instance("NoSuchPattern", 1)
    raise AssertionError("unknown pattern accepted")
except ValueError:
    pass
"#,
        );
    });
}

#[test]
fn search_and_metrics() {
    let dir = tempfile_dir();
    with_module(|py, g| {
        g.set_item("tmp", dir.to_str().unwrap()).unwrap();
        run(
            py,
            g,
            r#"
import os
a = pf.Image.synthetic(1, 32, 32)
b = pf.Image.synthetic(2, 32, 32)
gal = pf.DescriptorSet(["a", "b"], [pf.thumbnail_descriptor(a), pf.thumbnail_descriptor(b)])
qs = pf.DescriptorSet(["q1", "q2"], [pf.thumbnail_descriptor(b), pf.thumbnail_descriptor(a)])
path = os.path.join(tmp, "g.apds")
gal.write(path)
back = pf.DescriptorSet.read(path)
assert back.ids == ["a", "b"] and back.rows() == gal.rows()
hits = pf.search_topk(qs, gal, 1)
assert [(q, h[0][0]) for q, h in hits] == [("q1", "b"), ("q2", "a")]
assert abs(hits[0][1][0][1] - 1.0) < 1e-12
gt = {"q1": "b", "q2": "a"}
assert pf.recall_at_1(hits, gt) == 1.0
rows = [(q, h[0][0], h[0][1]) for q, h in hits]
assert pf.micro_average_precision(rows, gt) == 1.0
assert abs(pf.micro_average_precision([("a", "x", 0.9), ("b", "y", 0.8), ("c", "z", 0.7)], {"a": "x", "c": "z"}) - 5 / 6) < 1e-15
merged = pf.aggregate_max([hits, [("q1", [("b", 0.5)]), ("q2", [("a", 0.5)])]])
assert [q for q, _ in merged] == ["q1", "q2"]
acc = pf.pattern_accuracy(
    {"q1": "p1", "q2": "self:q2"},
    {"q1": ["Blur", "Rotate"], "q2": ["Swirl"]},
    {"p1": ["Rotate", "Mosaic"]},
    {"q1": "s", "q2": "s"},
)
assert acc == 0.75
"#,
        );
    });
    std::fs::remove_dir_all(dir).ok();
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("pf-bindings-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
