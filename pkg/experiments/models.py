from django.db import models
import uuid

from approximation.bounds import BOUND_TAGS


class ExperimentRun(models.Model):
    """One recorded invocation of an experiment command"""
    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    command = models.CharField(max_length=32)
    system = models.CharField(max_length=255, blank=True)
    degrees = models.JSONField(default=list, blank=True)
    config = models.JSONField(default=dict, help_text="Validated command options")
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='completed')
    summary = models.JSONField(default=dict, blank=True)
    output_path = models.CharField(max_length=500, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} on {self.system or 'data'} ({self.status})"


class BoundRecord(models.Model):
    """A certified bound computed during a run, with the measured error next to it"""
    TAG_CHOICES = [(tag, tag) for tag in BOUND_TAGS]

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='bounds')
    theorem_tag = models.CharField(max_length=12, choices=TAG_CHOICES)
    degrees = models.JSONField(default=list)
    steps = models.PositiveIntegerField(default=1)
    value = models.FloatField()
    constants = models.JSONField(default=dict, blank=True)
    clamped = models.BooleanField(default=False, help_text="A modulus argument exceeded the domain diameter")
    measured_error = models.FloatField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['run', 'theorem_tag', 'steps']

    def __str__(self):
        return f"{self.theorem_tag} n={self.degrees} k={self.steps}: {self.value:.4g}"

    @property
    def holds(self):
        return self.measured_error is None or self.measured_error <= self.value
