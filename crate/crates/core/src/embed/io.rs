use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbedError, EmbeddingMatrix, Vocabulary};

/// Writes `"<V> <d>"` followed by one `"<token> <v1> ... <vd>"` line per word.
/// Values use the shortest representation that parses back to the same `f64`.
pub fn write_embeddings<W: Write>(matrix: &EmbeddingMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", matrix.len(), matrix.dim())?;
    for (i, token) in matrix.vocabulary().tokens().iter().enumerate() {
        out.write_all(token.as_bytes())?;
        for v in matrix.row(i) {
            write!(out, " {v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), EmbedError> {
    let path = path.as_ref();
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_embeddings(matrix, BufWriter::new(file)).map_err(io_err)
}

fn format_err(line: usize, message: impl Into<String>) -> EmbedError {
    EmbedError::Format {
        line,
        message: message.into(),
    }
}

pub fn read_embeddings<R: Read>(input: R) -> Result<EmbeddingMatrix, EmbedError> {
    let mut lines = BufReader::new(input).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| format_err(1, e.to_string()))?,
        None => return Err(format_err(1, "missing header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (rows, dim) = match fields.as_slice() {
        [v, d] => (
            v.parse::<usize>()
                .map_err(|_| format_err(1, format!("bad vocabulary size {v:?}")))?,
            d.parse::<usize>()
                .map_err(|_| format_err(1, format!("bad dimension {d:?}")))?,
        ),
        _ => return Err(format_err(1, "header must be \"<V> <d>\"")),
    };

    let mut tokens = Vec::with_capacity(rows);
    let mut vectors = Vec::with_capacity(rows * dim);
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line.map_err(|e| format_err(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == rows {
            return Err(format_err(line_no, format!("more than {rows} rows")));
        }
        let mut parts = line.split(' ');
        let token = parts.next().unwrap_or_default();
        let before = vectors.len();
        for field in parts {
            let value: f64 = field
                .parse()
                .map_err(|_| format_err(line_no, format!("non-numeric value {field:?}")))?;
            if !value.is_finite() {
                return Err(format_err(line_no, format!("non-finite value {field:?}")));
            }
            vectors.push(value);
        }
        let found = vectors.len() - before;
        if found != dim {
            return Err(format_err(line_no, format!("expected {dim} values, found {found}")));
        }
        tokens.push(token.to_string());
    }
    if tokens.len() != rows {
        return Err(format_err(
            tokens.len() + 2,
            format!("expected {rows} rows, found {}", tokens.len()),
        ));
    }
    let vocabulary = Vocabulary::from_ordered_tokens(tokens);
    if vocabulary.len() != rows {
        return Err(format_err(1, "duplicate tokens"));
    }
    EmbeddingMatrix::new(vocabulary, dim, vectors)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, EmbedError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_embeddings(file)
}
