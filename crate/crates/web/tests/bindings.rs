use serde_json::Value;
use skylog_web::{altitude_profile_json, field_map_json, rsrq_coverage_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn field_map_has_n_squared_cells() {
    let v = parse(field_map_json(7, 60.0, "rsrp", 12).unwrap());
    assert_eq!(v["values"].as_array().unwrap().len(), 144);
    assert_eq!(v["stations"].as_array().unwrap().len(), 3);
    assert!(v["values"].as_array().unwrap().iter().all(|x| x.is_number()));
}

#[test]
fn field_map_rejects_bad_input() {
    assert!(field_map_json(7, 60.0, "cqi", 12).is_err());
    assert!(field_map_json(7, 500.0, "rsrp", 12).is_err());
    assert!(field_map_json(7, 60.0, "rsrp", 0).is_err());
}

#[test]
fn pooled_profile_rises_with_altitude() {
    let v = parse(altitude_profile_json(0, 20, "rsrp").unwrap());
    assert_eq!(v["bins"].as_array().unwrap().len(), 13);
    assert!(v["spearman_rho"].as_f64().unwrap() > 0.8);
}

#[test]
fn coverage_is_monotone_in_threshold() {
    let lo = parse(rsrq_coverage_json(7, -15.0).unwrap())["frac_rsrq_poor"].as_f64().unwrap();
    let hi = parse(rsrq_coverage_json(7, -9.0).unwrap())["frac_rsrq_poor"].as_f64().unwrap();
    assert!(lo <= hi);
}
