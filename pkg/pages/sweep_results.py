import json
from datetime import datetime

import streamlit as st

from utils import export_to_excel, format_fraction, load_results, sanitize_filename


def show_sweep_results():
    st.header("📊 Sweep Results")

    uploaded = st.file_uploader("Result file written by `geoach`", type=["csv", "json"])
    if uploaded is None:
        st.info("Upload a CSV or JSON result file to inspect it")
        return

    kind = uploaded.name.rsplit('.', 1)[-1].lower()
    try:
        runs, summary, meta = load_results(uploaded.getvalue(), kind)
    except Exception as e:
        st.error(f"Could not read {uploaded.name}: {str(e)}")
        return

    show_overview(runs, meta)

    st.subheader("Summary")
    if summary.empty:
        st.warning("The file has no summary table")
    else:
        st.dataframe(summary, use_container_width=True)

    st.subheader("Runs")
    st.dataframe(runs, use_container_width=True)

    show_export(runs, summary, meta, uploaded.name)


def show_overview(runs, meta):
    col1, col2, col3, col4 = st.columns(4)

    with col1:
        st.metric("Runs", len(runs))

    with col2:
        mode = meta.get('mode') or (runs['mode'].iloc[0] if 'mode' in runs and len(runs) else "N/A")
        st.metric("Mode", mode)

    with col3:
        if 'largest_fraction' in runs and len(runs):
            st.metric("Median largest fraction", format_fraction(runs['largest_fraction'].median()))
        elif 'max_load' in runs and len(runs):
            st.metric("Median max load", f"{runs['max_load'].median():g}")
        else:
            st.metric("Median", "N/A")

    with col4:
        if 'strategy_failed' in runs and len(runs):
            failed = int(runs['strategy_failed'].fillna(False).astype(bool).sum())
            st.metric("Strategy failures", failed)
        else:
            st.metric("Strategy failures", "N/A")

    if meta.get('danger_mode'):
        st.caption(f"Dangerous blocks evaluated in **{meta['danger_mode']}** mode")


def show_export(runs, summary, meta, source_name):
    st.subheader("📥 Export")

    export_format = st.selectbox(
        "Export Format",
        ["Excel (.xlsx)", "CSV (.csv)", "JSON (.json)"]
    )
    stem = sanitize_filename(source_name.rsplit('.', 1)[0])
    stamp = datetime.now().strftime('%Y%m%d_%H%M%S')

    if export_format.startswith("Excel"):
        st.download_button(
            label="📥 Download Excel File",
            data=export_to_excel({'Runs': runs, 'Summary': summary}),
            file_name=f"{stem}_{stamp}.xlsx",
            mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"
        )

    elif export_format.startswith("CSV"):
        st.download_button(
            label="📥 Download CSV File",
            data=runs.to_csv(index=False),
            file_name=f"{stem}_{stamp}.csv",
            mime="text/csv"
        )

    elif export_format.startswith("JSON"):
        payload = {
            'rows': json.loads(runs.to_json(orient='records')),
            'summary': json.loads(summary.to_json(orient='records')) if not summary.empty else [],
            'meta': meta,
        }
        st.download_button(
            label="📥 Download JSON File",
            data=json.dumps(payload, indent=2),
            file_name=f"{stem}_{stamp}.json",
            mime="application/json"
        )
