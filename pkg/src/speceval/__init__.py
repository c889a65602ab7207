"""speceval: specification-centric evaluation harness for a mini-Java language."""

__version__ = "0.1.0"
