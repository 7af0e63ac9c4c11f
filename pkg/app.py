import streamlit as st

from utils import get_environment_info


def main():
    st.set_page_config(
        page_title="Geometric Achlioptas Explorer",
        page_icon="🕸️",
        layout="wide"
    )

    col1, col2 = st.columns([3, 1])

    with col1:
        st.title("🕸️ Geometric Achlioptas Explorer")

    with col2:
        info = get_environment_info()
        st.caption(f"numba {info['numba'] or 'missing'} · scipy {info['scipy'] or 'missing'} · "
                   f"{info['cpu_count']} CPUs")

    st.divider()

    tab1, tab2 = st.tabs([
        "📊 Sweep results",
        "🎲 Single run"
    ])

    with tab1:
        from pages.sweep_results import show_sweep_results
        show_sweep_results()

    with tab2:
        from pages.single_run import show_single_run
        show_single_run()


if __name__ == "__main__":
    main()
