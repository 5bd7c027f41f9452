"""Figure renderers for daviesgap CSV output."""

from .render import EmptyData, MissingColumn, PlotSpec, RenderError, render

__version__ = "0.1.0"
