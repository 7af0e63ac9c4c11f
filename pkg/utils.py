import io
import json
import os
import re

import pandas as pd


def sanitize_filename(filename):
    """Sanitize filename for safe storage"""
    safe_chars = re.sub(r'[<>:"/\\|?*\s]', '_', filename)
    if len(safe_chars) > 255:
        name, ext = os.path.splitext(safe_chars)
        safe_chars = name[:255 - len(ext)] + ext
    return safe_chars


def format_fraction(value):
    """Format a component fraction for display"""
    if value is None or pd.isna(value):
        return "N/A"
    return f"{value:.2%}"


def format_duration(ms):
    """Format a runtime in milliseconds in human readable form"""
    if ms is None or pd.isna(ms):
        return "N/A"
    if ms < 1000:
        return f"{ms:.0f} ms"
    seconds = ms / 1000.0
    if seconds < 120:
        return f"{seconds:.1f} s"
    return f"{seconds / 60.0:.1f} min"


def parse_config_text(text):
    """Parse flat key = value settings; '#' starts a comment, ';' also separates pairs"""
    parsed = {}
    for line in text.splitlines():
        line = line.split('#', 1)[0]
        for pair in line.split(';'):
            if '=' in pair:
                key, value = pair.split('=', 1)
                parsed[key.strip().lower().replace('-', '_')] = value.strip()
            elif pair.strip():
                raise ValueError(f"Expected key = value, got '{pair.strip()}'")
    return parsed


def export_to_excel(sheets):
    """Export named DataFrames to an in-memory Excel workbook"""
    output = io.BytesIO()

    with pd.ExcelWriter(output, engine='xlsxwriter') as writer:
        workbook = writer.book
        header_format = workbook.add_format({
            'bold': True,
            'text_wrap': True,
            'valign': 'top',
            'fg_color': '#D7E4BC',
            'border': 1
        })

        for sheet_name, df in sheets.items():
            df.to_excel(writer, sheet_name=sheet_name, index=False)
            worksheet = writer.sheets[sheet_name]

            for col_num, value in enumerate(df.columns.values):
                worksheet.write(0, col_num, value, header_format)

            for i, col in enumerate(df.columns):
                lengths = df[col].astype(str).str.len()
                max_length = max(lengths.max() if len(lengths) else 0, len(str(col)))
                worksheet.set_column(i, i, min(max_length + 2, 50))

    return output.getvalue()


def load_results(content, kind):
    """Read a result file written by the harness into (runs, summary, meta)"""
    if isinstance(content, bytes):
        content = content.decode('utf-8')

    if kind == 'json':
        payload = json.loads(content)
        runs = pd.DataFrame(payload.get('rows', []))
        summary = pd.DataFrame(payload.get('summary', []))
        return runs, summary, payload.get('meta', {})

    if kind == 'csv':
        runs_text, _, summary_text = content.strip('\n').partition('\n\n')
        runs = pd.read_csv(io.StringIO(runs_text))
        summary = pd.read_csv(io.StringIO(summary_text)) if summary_text.strip() else pd.DataFrame()
        return runs, summary, {}

    raise ValueError(f"Unsupported result format '{kind}'")


def get_environment_info():
    """Report the numeric stack available to simulations"""
    info = {
        'cpu_count': os.cpu_count() or 1,
        'numba': None,
        'scipy': None,
        'numpy': None,
    }

    try:
        import numba
        info['numba'] = numba.__version__
    except Exception:
        pass

    try:
        import scipy
        info['scipy'] = scipy.__version__
    except Exception:
        pass

    try:
        import numpy
        info['numpy'] = numpy.__version__
    except Exception:
        pass

    return info
