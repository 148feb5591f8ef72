"""Stream helpers for command output.
"""

import io

NEWLINES = ('\r\n', '\n', '\r')

class TextIOIndenter(io.TextIOBase):
    """Text stream that indents every non-empty line before passing it on.

    Command implementers wrap stdout and stderr in one of these so anything a command
    prints lines up under the section titles of the command report. A line is indented
    when its first character arrives, so nothing dangles after the final new line and
    blank lines stay blank.

    Parameters
    ----------
    parent_stream : IOBase
        Stream to write to after indenting.
    indent_level : int, optional
        Number of indents to prepend.
    indent_size : int, optional
        Number of `indent_char` per indent.
    indent_char : str, optional
        Character used for indenting.

    Examples
    --------
    >>> TextIOIndenter(sys.stdout, 1).write("lambda\\n\\nmu\\n")
        lambda
    <BLANKLINE>
        mu
    """

    def __init__(self, parent_stream, indent_level=0, indent_size=4, indent_char=' '):
        self.__parent_stream = parent_stream
        self.__indent = indent_char * (indent_size * indent_level)
        self.__at_line_start = True
        super().__init__()

    @property
    def parent_stream(self):
        """
        Returns
        -------
        IOBase
            Stream this stream writes to.
        """
        return self.__parent_stream

    @property
    def indent(self):
        """
        Returns
        -------
        str
            Text prepended to every line.
        """
        return self.__indent

    def write(self, given):
        """Indents the given text and writes it to the parent stream.

        Parameters
        ----------
        given : str or bytes (utf-8)
            Text to write.

        Returns
        -------
        int
            Number of characters written to the parent stream.
        """
        text = given.decode('utf-8') if isinstance(given, bytes) else given

        pieces = []
        for line in text.splitlines(keepends=True):
            if self.__at_line_start and line not in NEWLINES:
                pieces.append(self.__indent)
            pieces.append(line)
            self.__at_line_start = line.endswith(NEWLINES)

        return self.parent_stream.write(''.join(pieces))

    def flush(self):
        """Flush the parent stream.
        """
        self.parent_stream.flush()
