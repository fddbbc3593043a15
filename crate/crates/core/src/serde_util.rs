use num_rational::Ratio;
use serde::ser::SerializeSeq;
use serde::Serializer;

fn fmt(r: &Ratio<i128>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn ratio_str<S: Serializer>(r: &Ratio<i128>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt(r))
}

pub(crate) fn ratio_vec<S: Serializer>(v: &[Ratio<i128>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&fmt(r))?;
    }
    seq.end()
}
