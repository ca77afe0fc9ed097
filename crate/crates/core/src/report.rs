//! Helpers shared by structured reports.

use serde_json::Value;

/// Removes every object key mentioning `wall_time`, recursively. Reports are
/// byte-identical across runs once timings are stripped.
pub fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.contains("wall_time"));
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_nested_keys() {
        let mut v = serde_json::json!({"a": 1, "wall_time_s": 2.0, "runs": [{"total_wall_time_s": 1, "b": 2}]});
        strip_timings(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "runs": [{"b": 2}]}));
    }
}
