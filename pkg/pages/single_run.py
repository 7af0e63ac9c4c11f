import pandas as pd
import streamlit as st

from core_model import ParameterError
from harness import ConfigError, load_config, run_trial
from utils import format_duration, format_fraction


def show_single_run():
    st.header("🎲 Single Online Run")

    with st.form("single_run_form"):
        col1, col2, col3 = st.columns(3)

        with col1:
            n = st.number_input("Rounds (n)", min_value=4, value=20000, step=1000)
            c = st.number_input("Density parameter c", min_value=0.001, value=1.0, format="%.3f")

        with col2:
            strategy = st.selectbox("Strategy", ["random", "greedy", "barrier", "giant"])
            seed = st.number_input("Seed", min_value=0, value=0, step=1)

        with col3:
            K = st.number_input("Barrier budget K", min_value=0.01, value=1.0)
            h = st.number_input("Block side h (boxes)", min_value=1, value=4, step=1)

        submitted = st.form_submit_button("Run", type="primary", use_container_width=True)

    if not submitted:
        return

    try:
        config = load_config(overrides={
            'mode': 'online',
            'n': int(n),
            'c': [float(c)],
            'strategy': strategy,
            'K': float(K),
            'h': int(h),
            'base_seed': int(seed),
        })
        with st.spinner("Simulating..."):
            row = run_trial(config, 0, 0)
    except ConfigError as e:
        for problem in e.problems:
            st.error(problem)
        return
    except ParameterError as e:
        st.error(str(e))
        return

    show_run(row)


def show_run(row):
    col1, col2, col3, col4 = st.columns(4)

    with col1:
        st.metric("Largest component", row['largest_size'])

    with col2:
        st.metric("Largest fraction", format_fraction(row['largest_fraction']))

    with col3:
        st.metric("Radius r", f"{row['r']:.5f}")

    with col4:
        st.metric("Runtime", format_duration(row['runtime_ms']))

    if row.get('barrier_crossed') is not None:
        if row['strategy_failed']:
            st.warning("The pseudo-dangerous list overflowed during the run")
        if row['barrier_crossed']:
            st.error("An occupied component crossed the barrier")
        else:
            st.success("The barrier held")

    details = row.get('details') or {}
    if details:
        st.subheader("Strategy report")
        st.dataframe(pd.DataFrame([details]), use_container_width=True)

    if row.get('series'):
        st.subheader("Largest component over time")
        st.dataframe(pd.DataFrame(row['series'], columns=['round', 'largest']),
                     use_container_width=True)
