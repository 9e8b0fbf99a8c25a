//! Forward kernels shared by the tape and its backward rules.

use super::{NumError, Scalar, Tensor};

pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for k in 0..rank {
        let da = if k + a.len() >= rank { a[k + a.len() - rank] } else { 1 };
        let db = if k + b.len() >= rank { b[k + b.len() - rank] } else { 1 };
        out[k] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// For each output element (row-major over `out`), the flat offset into a
/// tensor of shape `src` broadcast to `out`.
fn broadcast_offsets(src: &[usize], out: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let pad = rank - src.len();
    let mut strides = vec![0usize; rank];
    let mut s = 1;
    for k in (0..src.len()).rev() {
        strides[k + pad] = if src[k] == 1 { 0 } else { s };
        s *= src[k];
    }
    let n: usize = out.iter().product();
    let mut offsets = Vec::with_capacity(n);
    let mut idx = vec![0usize; rank];
    let mut off = 0usize;
    for _ in 0..n {
        offsets.push(off);
        for k in (0..rank).rev() {
            idx[k] += 1;
            off += strides[k];
            if idx[k] < out[k] {
                break;
            }
            off -= strides[k] * idx[k];
            idx[k] = 0;
        }
    }
    offsets
}

pub(crate) fn broadcast_binary<T: Scalar>(
    op: &'static str,
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>, NumError> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    let shape = broadcast_shape(a.shape(), b.shape()).ok_or_else(|| NumError::Shape {
        op,
        detail: format!("cannot broadcast {:?} with {:?}", a.shape(), b.shape()),
    })?;
    let oa = broadcast_offsets(a.shape(), &shape);
    let ob = broadcast_offsets(b.shape(), &shape);
    let (da, db) = (a.data(), b.data());
    let data = oa.iter().zip(&ob).map(|(&i, &j)| f(da[i], db[j])).collect();
    Tensor::new(shape, data)
}

/// Sum a gradient of broadcast shape back down to `target`.
pub(crate) fn reduce_to<T: Scalar>(g: &Tensor<T>, target: &[usize]) -> Tensor<T> {
    if g.shape() == target {
        return g.clone();
    }
    let offsets = broadcast_offsets(target, g.shape());
    let mut out = Tensor::zeros(target);
    let od = out.data_mut();
    for (&o, &v) in offsets.iter().zip(g.data()) {
        od[o] = od[o] + v;
    }
    out
}

/// Broadcast `src` up to `shape` (materialized).
pub(crate) fn expand_to<T: Scalar>(src: &Tensor<T>, shape: &[usize]) -> Tensor<T> {
    if src.shape() == shape {
        return src.clone();
    }
    let offsets = broadcast_offsets(src.shape(), shape);
    let d = src.data();
    Tensor::new(shape.to_vec(), offsets.iter().map(|&o| d[o]).collect()).expect("expand")
}

/// `a · b` for rank-2 operands, optionally transposing either side.
pub(crate) fn matmul<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    trans_a: bool,
    trans_b: bool,
) -> Result<Tensor<T>, NumError> {
    let (ar, ac) = a.dims2()?;
    let (br, bc) = b.dims2()?;
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let (k2, n) = if trans_b { (bc, br) } else { (br, bc) };
    if k != k2 {
        return Err(NumError::Shape {
            op: "matmul",
            detail: format!("inner dims differ: {:?} x {:?}", a.shape(), b.shape()),
        });
    }
    let ad = a.data();
    let bd = b.data();
    let mut out = vec![T::zero(); m * n];
    // Materialize b untransposed as [k, n] so the inner loop is contiguous.
    let b_kn: std::borrow::Cow<[T]> = if trans_b {
        let mut t = vec![T::zero(); k * n];
        for j in 0..n {
            for p in 0..k {
                t[p * n + j] = bd[j * k + p];
            }
        }
        std::borrow::Cow::Owned(t)
    } else {
        std::borrow::Cow::Borrowed(bd)
    };
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = if trans_a { ad[p * ac + i] } else { ad[i * ac + p] };
            if aip == T::zero() {
                continue;
            }
            let brow = &b_kn[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + aip * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// View any tensor of rank ≥ 1 as (rows, cols) over its last axis.
pub(crate) fn row_view<T: Scalar>(op: &'static str, x: &Tensor<T>) -> Result<(usize, usize), NumError> {
    match x.shape() {
        [] => Err(NumError::Shape { op, detail: "row op on a scalar".into() }),
        [c] => Ok((1, *c)),
        [r, c] => Ok((*r, *c)),
        s => Err(NumError::Shape { op, detail: format!("row op needs rank 1 or 2, got {s:?}") }),
    }
}

pub(crate) fn softmax_rows<T: Scalar>(x: &Tensor<T>, log: bool) -> Result<Tensor<T>, NumError> {
    let (r, c) = row_view(if log { "row_log_softmax" } else { "row_softmax" }, x)?;
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let row = &x.data()[i * c..(i + 1) * c];
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let z: T = row.iter().map(|&v| (v - m).exp()).sum();
        if log {
            let lz = z.ln();
            out.extend(row.iter().map(|&v| (v - m) - lz));
        } else {
            out.extend(row.iter().map(|&v| (v - m).exp() / z));
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `max(x, 0) + log1p(exp(-|x|))`.
pub(crate) fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn reduce_axis<T: Scalar>(
    op: &'static str,
    x: &Tensor<T>,
    axis: Option<usize>,
    mean: bool,
) -> Result<Tensor<T>, NumError> {
    match axis {
        None if mean => {
            // shift by the first element so constant inputs come back exactly
            let d = x.data();
            let Some(&x0) = d.first() else { return Ok(Tensor::scalar(T::zero())) };
            let s: T = d.iter().map(|&v| v - x0).sum();
            Ok(Tensor::scalar(x0 + s / T::from_f64(d.len() as f64)))
        }
        None => Ok(Tensor::scalar(x.data().iter().copied().sum())),
        Some(ax) => {
            let shape = x.shape();
            if ax >= shape.len() {
                return Err(NumError::Shape {
                    op,
                    detail: format!("axis {ax} out of range for {shape:?}"),
                });
            }
            let outer: usize = shape[..ax].iter().product();
            let len = shape[ax];
            let inner: usize = shape[ax + 1..].iter().product();
            let mut out = vec![T::zero(); outer * inner];
            let mut shift = vec![T::zero(); outer * inner];
            if mean && len > 0 {
                for o in 0..outer {
                    shift[o * inner..(o + 1) * inner].copy_from_slice(&x.data()[o * len * inner..o * len * inner + inner]);
                }
            }
            for o in 0..outer {
                for l in 0..len {
                    let base = (o * len + l) * inner;
                    for i in 0..inner {
                        let k = o * inner + i;
                        out[k] = out[k] + (x.data()[base + i] - shift[k]);
                    }
                }
            }
            if mean && len > 0 {
                let n = T::from_f64(len as f64);
                out.iter_mut().zip(&shift).for_each(|(v, &s)| *v = s + *v / n);
            }
            let mut oshape = shape.to_vec();
            oshape.remove(ax);
            Tensor::new(oshape, out)
        }
    }
}

/// Inverse of `reduce_axis`: broadcast a reduced gradient back along `axis`.
pub(crate) fn expand_axis<T: Scalar>(g: &Tensor<T>, shape: &[usize], axis: Option<usize>, scale: T) -> Tensor<T> {
    match axis {
        None => Tensor::full(shape, g.item() * scale),
        Some(ax) => {
            let outer: usize = shape[..ax].iter().product();
            let len = shape[ax];
            let inner: usize = shape[ax + 1..].iter().product();
            let mut out = Vec::with_capacity(outer * len * inner);
            for o in 0..outer {
                for _ in 0..len {
                    out.extend(g.data()[o * inner..(o + 1) * inner].iter().map(|&v| v * scale));
                }
            }
            Tensor::new(shape.to_vec(), out).expect("expand_axis")
        }
    }
}

pub(crate) fn concat<T: Scalar>(parts: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>, NumError> {
    let first = parts.first().ok_or(NumError::Shape { op: "concat", detail: "no inputs".into() })?;
    let rank = first.rank();
    if axis >= rank {
        return Err(NumError::Shape { op: "concat", detail: format!("axis {axis} >= rank {rank}") });
    }
    for p in parts {
        let ok = p.rank() == rank
            && p.shape().iter().enumerate().all(|(k, &d)| k == axis || d == first.shape()[k]);
        if !ok {
            return Err(NumError::Shape {
                op: "concat",
                detail: format!("{:?} does not conform to {:?} off axis {axis}", p.shape(), first.shape()),
            });
        }
    }
    let outer: usize = first.shape()[..axis].iter().product();
    let inner: usize = first.shape()[axis + 1..].iter().product();
    let total: usize = parts.iter().map(|p| p.shape()[axis]).sum();
    let mut out = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for p in parts {
            let chunk = p.shape()[axis] * inner;
            out.extend_from_slice(&p.data()[o * chunk..(o + 1) * chunk]);
        }
    }
    let mut shape = first.shape().to_vec();
    shape[axis] = total;
    Tensor::new(shape, out)
}

/// Slice `[start, start+len)` along `axis` (the inverse of one concat piece).
pub(crate) fn narrow<T: Scalar>(x: &Tensor<T>, axis: usize, start: usize, len: usize) -> Tensor<T> {
    let shape = x.shape();
    let outer: usize = shape[..axis].iter().product();
    let full = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * full + start) * inner;
        out.extend_from_slice(&x.data()[base..base + len * inner]);
    }
    let mut s = shape.to_vec();
    s[axis] = len;
    Tensor::new(s, out).expect("narrow")
}

pub(crate) fn gather_rows<T: Scalar>(op: &'static str, x: &Tensor<T>, index: &[usize]) -> Result<Tensor<T>, NumError> {
    let (r, c) = x.dims2()?;
    let mut out = Vec::with_capacity(index.len() * c);
    for &i in index {
        if i >= r {
            return Err(NumError::Index { op, index: i, bound: r });
        }
        out.extend_from_slice(x.row(i));
    }
    Tensor::new(vec![index.len(), c], out)
}

pub(crate) fn scatter_add_rows<T: Scalar>(
    dest: &Tensor<T>,
    src: &Tensor<T>,
    index: &[usize],
) -> Result<Tensor<T>, NumError> {
    let (dr, dc) = dest.dims2()?;
    let (sr, sc) = src.dims2()?;
    if sc != dc || sr != index.len() {
        return Err(NumError::Shape {
            op: "scatter_add_rows",
            detail: format!("dest {:?}, src {:?}, {} indices", dest.shape(), src.shape(), index.len()),
        });
    }
    let mut out = dest.clone();
    let od = out.data_mut();
    for (s, &i) in index.iter().enumerate() {
        if i >= dr {
            return Err(NumError::Index { op: "scatter_add_rows", index: i, bound: dr });
        }
        let srow = &src.data()[s * sc..(s + 1) * sc];
        for (o, &v) in od[i * dc..(i + 1) * dc].iter_mut().zip(srow) {
            *o = *o + v;
        }
    }
    Ok(out)
}
