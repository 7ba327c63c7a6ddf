import uuid

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('command', models.CharField(max_length=32)),
                ('system', models.CharField(blank=True, max_length=255)),
                ('degrees', models.JSONField(blank=True, default=list)),
                ('config', models.JSONField(default=dict, help_text='Validated command options')),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed')], default='completed', max_length=20)),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('output_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='BoundRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('theorem_tag', models.CharField(choices=[('T1', 'T1'), ('T2', 'T2'), ('T3', 'T3'), ('T4', 'T4'), ('T5', 'T5'), ('T6a', 'T6a'), ('T6b', 'T6b'), ('T6c', 'T6c'), ('AppA', 'AppA'), ('MeasNoise', 'MeasNoise'), ('DataFull', 'DataFull'), ('DataPartial', 'DataPartial')], max_length=12)),
                ('degrees', models.JSONField(default=list)),
                ('steps', models.PositiveIntegerField(default=1)),
                ('value', models.FloatField()),
                ('constants', models.JSONField(blank=True, default=dict)),
                ('clamped', models.BooleanField(default=False, help_text='A modulus argument exceeded the domain diameter')),
                ('measured_error', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='bounds', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['run', 'theorem_tag', 'steps'],
            },
        ),
    ]
