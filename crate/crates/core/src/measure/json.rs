use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Node, PositiveMeasure};

fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

pub(super) fn positive_to_json<T: Real>(m: &PositiveMeasure<T>) -> String {
    let atoms: Vec<String> = m.atoms().iter().map(|&(x, w)| format!("[{},{}]", num(x), num(w))).collect();
    let nodes: Vec<String> =
        m.nodes().iter().map(|n| format!("[{},{},{}]", num(n.x), num(n.f), num(n.w))).collect();
    format!("{{\"atom0\":{},\"atoms\":[{}],\"nodes\":[{}]}}", num(m.atom0()), atoms.join(","), nodes.join(","))
}

fn tuple<T: Real>(v: &Value, len: usize) -> Result<Vec<T>> {
    let arr = v.as_array().filter(|a| a.len() == len).ok_or_else(|| Error::Parse(format!("expected array of {len} numbers")))?;
    arr.iter()
        .map(|x| x.as_f64().map(T::lit).ok_or_else(|| Error::Parse("expected number".into())))
        .collect()
}

pub(super) fn positive_from_json<T: Real>(s: &str) -> Result<PositiveMeasure<T>> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let atom0 = v.get("atom0").and_then(Value::as_f64).map(T::lit).unwrap_or_else(T::zero);
    let list = |key: &str| -> Vec<Value> { v.get(key).and_then(Value::as_array).cloned().unwrap_or_default() };
    let atoms = list("atoms")
        .iter()
        .map(|a| tuple::<T>(a, 2).map(|t| (t[0], t[1])))
        .collect::<Result<Vec<_>>>()?;
    let nodes = list("nodes")
        .iter()
        .map(|a| tuple::<T>(a, 3).map(|t| Node { x: t[0], f: t[1], w: t[2] }))
        .collect::<Result<Vec<_>>>()?;
    PositiveMeasure::from_nodes(atom0, atoms, nodes)
}

#[cfg(test)]
mod tests {
    use crate::measure::{marchenko_pastur, PositiveMeasure};

    #[test]
    fn round_trip_is_exact() {
        let mp = marchenko_pastur::<f64>();
        let back = PositiveMeasure::<f64>::from_json(&mp.to_json()).unwrap();
        assert_eq!(back.nodes(), mp.nodes());
        let a = PositiveMeasure::from_atoms([(0.0, 0.25), (3.0, 0.75)]).unwrap();
        let s = a.to_json();
        assert!(s.starts_with("{\"atom0\":2.5000000000000000e-1,\"atoms\":[[3.0000000000000000e0,"));
        let b = PositiveMeasure::<f64>::from_json(&s).unwrap();
        assert_eq!(b.atoms(), a.atoms());
        assert_eq!(b.atom0(), 0.25);
    }

    #[test]
    fn rejects_garbage() {
        assert!(PositiveMeasure::<f64>::from_json("{\"atoms\":[[1]]}").is_err());
        assert!(PositiveMeasure::<f64>::from_json("nope").is_err());
    }
}
