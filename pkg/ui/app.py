import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import streamlit as st

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from ep.core import best_edit_path, classify_path, ep_forward, fp_prefix_vector  # noqa: E402
from ep.decode import predict_free, predict_lex  # noqa: E402
from ep.formats import (  # noqa: E402
    emissions_from_record,
    load_lexicon,
    matrix_frame,
    parse_matrix_dump,
    path_frame,
)
from ep.models import EmissionFile  # noqa: E402

LEXICON = os.environ.get("EP_UI_LEXICON", "")

st.title("Edit Probability – Matrix Viewer")

source = st.radio("Source", ["Emission file", "Matrix dump"], horizontal=True)
show_log = st.checkbox("Show log values", value=False)

# --- Matrix dump written by `python -m cli matrix`
if source == "Matrix dump":
    dump = st.file_uploader("Matrix dump (CSV)", type=["csv"])
    if not dump:
        st.caption("Upload a matrix dump to start.")
        st.stop()
    try:
        grid, path = parse_matrix_dump(dump.getvalue().decode("utf-8"))
    except (ValueError, KeyError) as e:
        st.error(f"Invalid matrix dump: {e}")
        st.stop()
    st.metric("ln EP", f"{grid.iloc[-1, -1]:.6g}")
    st.subheader("EP matrix")
    st.dataframe(grid if show_log else np.exp(grid), use_container_width=True)
    st.subheader("Best edit path")
    if path:
        st.dataframe(path_frame(path), hide_index=True)
    else:
        st.warning("The dump holds no edit path (EP is zero).")
    st.stop()

# --- Emissions
uploaded = st.file_uploader("Emission file (JSON)", type=["json"])
if not uploaded:
    st.caption("Upload an emission file to start.")
    st.stop()

try:
    em = emissions_from_record(EmissionFile.model_validate_json(uploaded.getvalue()))
except ValueError as e:
    st.error(f"Invalid emission file: {e}")
    st.stop()

st.info(f"{em.n} frame(s), alphabet **{''.join(em.alphabet.symbols)}** (EOS `{em.alphabet.eos}`)")

free = predict_free(em)
target_text = st.text_input("Target string", value=free.text.text)

try:
    target = em.alphabet.encode(target_text)
except ValueError as e:
    st.error(str(e))
    st.stop()

matrix = ep_forward(em, target)
path, path_log = best_edit_path(em, target)
fp = fp_prefix_vector(em, target)

cols = st.columns(3)
cols[0].metric("ln EP", f"{matrix.log_ep:.6g}")
cols[1].metric("ln FP", f"{fp[-1]:.6g}" if np.isfinite(fp[-1]) else "-inf")
cols[2].metric("best path", classify_path(path, target) if np.isfinite(path_log) else "none")

# --- EP matrix, probability space for reading
st.subheader("EP matrix")
grid = matrix_frame(matrix)
grid.index = ["ε"] + [em.alphabet.symbols[s] for s in target.indices]
st.dataframe(grid if show_log else np.exp(grid), use_container_width=True)

st.subheader("FP prefix vector")
st.dataframe(
    pd.DataFrame({"prefix": ["ε"] + [target.text[:i] for i in range(1, len(fp))], "ln FP": fp}),
    hide_index=True,
)

st.subheader("Best edit path")
if np.isfinite(path_log):
    st.caption(f"ln p = {path_log:.6g}")
    st.dataframe(path_frame(path), hide_index=True)
else:
    st.warning("EP is zero: no edit path with positive probability.")

# --- Lexicon prediction (optional)
lex_path = st.text_input("Lexicon file", value=LEXICON)
if lex_path:
    lam = st.slider("lambda", min_value=0.5, max_value=1.0, value=0.95, step=0.01)
    fold = st.checkbox("Fold case", value=False)
    try:
        lex = load_lexicon(lex_path, em.alphabet, fold_case=fold)
        pred = predict_lex(em, lex, lam)
        st.success(f"Prediction: **{pred.text.text}** ({pred.source.value}, ln EP {pred.log_score:.6g})")
    except (ValueError, OSError) as e:
        st.error(f"Lexicon error: {e}")
else:
    st.success(f"Lexicon-free prediction: **{free.text.text}** (ln EP {free.log_score:.6g})")


# py -m streamlit run ui/app.py --server.port 8501
